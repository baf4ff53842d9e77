#pragma once

// Image decoding (PNG, binary PPM) and the native-resolution preprocessing
// pipeline: fit to a longest-edge budget, floor to patch multiples, resize,
// and cut into row-major patch vectors.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vitmm {

struct Image {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels; // RGB, row-major, 3*height*width
};

struct PatchGrid {
    int rows = 0;       // H_p
    int cols = 0;       // W_p
    int patch_size = 0; // p
    // rows*cols vectors of length 3*p*p, row-major (row 0 left to right first)
    std::vector<std::vector<float>> patch_vectors;
};

enum class ImageFormat { PNG, PPM_P6 };

Image decode_image(const std::vector<std::uint8_t> &bytes, ImageFormat format);
// Sniffs the magic bytes.
Image decode_image_auto(const std::vector<std::uint8_t> &bytes);
Image load_image(const std::string &path);

// RGB8 PNG encoder, used by tooling and round-trip tests.
std::vector<std::uint8_t> encode_png(const Image &img);

// Aspect-preserving fit: longest side <= max_edge (downscale only), both
// dimensions floored to a multiple of patch_size and clamped to >= patch_size.
struct TargetDims {
    int height = 0;
    int width = 0;
};
TargetDims fit_resolution(int height, int width, int max_edge, int patch_size);

Image resize_bilinear(const Image &img, int out_height, int out_width);

struct Normalization {
    std::array<float, 3> mean{0.f, 0.f, 0.f};
    std::array<float, 3> stddev{1.f, 1.f, 1.f};
};

// Requires dims to be multiples of patch_size. Pixels are scaled to [0,1],
// channel-standardized, then flattened channel-last per patch.
PatchGrid patchify(const Image &img, int patch_size, const Normalization &norm = {});

// Inverse of patchify up to the standardization (returns standardized values).
std::vector<float> unpatchify(const PatchGrid &grid);

// decode -> fit -> resize -> patchify
PatchGrid preprocess(const Image &img, int max_edge, int patch_size,
                     const Normalization &norm = {});

} // namespace vitmm
