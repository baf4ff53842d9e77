#include "vitmm/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include <png.h>

#include "vitmm/errors.hpp"

namespace vitmm {

namespace {

struct PngReadState {
    const std::uint8_t *data;
    std::size_t size;
    std::size_t pos;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t len) {
    auto *st = static_cast<PngReadState *>(png_get_io_ptr(png));
    if (st->pos + len > st->size)
        png_error(png, "read past end of PNG buffer");
    std::memcpy(out, st->data + st->pos, len);
    st->pos += len;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
    auto *out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

Image decode_png(const std::vector<std::uint8_t> &bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw DecodeError("not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DecodeError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError("png_create_info_struct failed");
    }

    Image img;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("corrupt or truncated PNG");
    }

    PngReadState st{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &st, png_read_fn);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth != 8 || (color != PNG_COLOR_TYPE_RGB && color != PNG_COLOR_TYPE_RGB_ALPHA)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("unsupported PNG color type (need 8-bit RGB or RGBA)");
    }
    if (color == PNG_COLOR_TYPE_RGB_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.pixels.resize(std::size_t(3) * img.width * img.height);
    row_ptrs.resize(img.height);
    for (int y = 0; y < img.height; ++y)
        row_ptrs[y] = img.pixels.data() + std::size_t(y) * img.width * 3;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

// Binary PPM: "P6\n<w> <h>\n<maxval>\n" followed by raw RGB bytes.
// '#' comments are allowed in the header.
Image decode_ppm(const std::vector<std::uint8_t> &bytes) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_ws();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw DecodeError("malformed PPM header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos]))
            v = v * 10 + (bytes[pos++] - '0');
        return v;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw DecodeError("not a P6 PPM file");
    pos = 2;
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (w < 1 || h < 1) throw DecodeError("PPM dimensions must be positive");
    if (maxval != 255) throw DecodeError("unsupported PPM maxval (need 255)");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw DecodeError("malformed PPM header");
    ++pos; // single whitespace separates header and payload

    const std::size_t need = std::size_t(3) * w * h;
    if (bytes.size() - pos < need)
        throw DecodeError("truncated PPM payload");

    Image img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + need);
    return img;
}

} // namespace

Image decode_image(const std::vector<std::uint8_t> &bytes, ImageFormat format) {
    switch (format) {
        case ImageFormat::PNG: return decode_png(bytes);
        case ImageFormat::PPM_P6: return decode_ppm(bytes);
    }
    throw DecodeError("unknown image format");
}

Image decode_image_auto(const std::vector<std::uint8_t> &bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return decode_ppm(bytes);
    return decode_png(bytes);
}

Image load_image(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_image_auto(bytes);
}

std::vector<std::uint8_t> encode_png(const Image &img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DecodeError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DecodeError("png_create_info_struct failed");
    }
    std::vector<std::uint8_t> out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DecodeError("PNG encode failed");
    }
    png_set_write_fn(png, &out, png_write_fn, nullptr);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + std::size_t(y) * img.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

TargetDims fit_resolution(int height, int width, int max_edge, int patch_size) {
    if (max_edge < patch_size)
        throw DimError("max_edge must be at least patch_size");
    double h = height, w = width;
    const double longest = std::max(h, w);
    if (longest > max_edge) { // downscale only
        const double scale = double(max_edge) / longest;
        h = std::floor(h * scale);
        w = std::floor(w * scale);
    }
    auto to_multiple = [&](double v) {
        int m = static_cast<int>(std::floor(v / patch_size)) * patch_size;
        return std::max(m, patch_size);
    };
    return TargetDims{to_multiple(h), to_multiple(w)};
}

Image resize_bilinear(const Image &img, int out_height, int out_width) {
    if (img.height == out_height && img.width == out_width) return img;
    Image out;
    out.height = out_height;
    out.width = out_width;
    out.pixels.resize(std::size_t(3) * out_height * out_width);
    const double sy = double(img.height) / out_height;
    const double sx = double(img.width) / out_width;
    for (int y = 0; y < out_height; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(int(std::floor(fy)), 0, img.height - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(int(std::floor(fx)), 0, img.width - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                auto px = [&](int yy, int xx) {
                    return double(img.pixels[(std::size_t(yy) * img.width + xx) * 3 + c]);
                };
                const double v = (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) +
                                 wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
                out.pixels[(std::size_t(y) * out_width + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

PatchGrid patchify(const Image &img, int patch_size, const Normalization &norm) {
    if (patch_size < 1) throw DimError("patch_size must be positive");
    if (img.height % patch_size != 0 || img.width % patch_size != 0)
        throw DimError("image dimensions must be multiples of patch_size");
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.rows = img.height / patch_size;
    grid.cols = img.width / patch_size;
    grid.patch_vectors.reserve(std::size_t(grid.rows) * grid.cols);
    for (int pr = 0; pr < grid.rows; ++pr) {
        for (int pc = 0; pc < grid.cols; ++pc) {
            std::vector<float> vec;
            vec.reserve(std::size_t(3) * patch_size * patch_size);
            for (int y = 0; y < patch_size; ++y) {
                for (int x = 0; x < patch_size; ++x) {
                    const int iy = pr * patch_size + y;
                    const int ix = pc * patch_size + x;
                    const std::uint8_t *p = img.pixels.data() + (std::size_t(iy) * img.width + ix) * 3;
                    for (int c = 0; c < 3; ++c) {
                        const float v = float(p[c]) / 255.f;
                        vec.push_back((v - norm.mean[c]) / norm.stddev[c]);
                    }
                }
            }
            grid.patch_vectors.push_back(std::move(vec));
        }
    }
    return grid;
}

std::vector<float> unpatchify(const PatchGrid &grid) {
    const int p = grid.patch_size;
    const int height = grid.rows * p, width = grid.cols * p;
    std::vector<float> out(std::size_t(3) * height * width, 0.f);
    for (int pr = 0; pr < grid.rows; ++pr)
        for (int pc = 0; pc < grid.cols; ++pc) {
            const auto &vec = grid.patch_vectors[std::size_t(pr) * grid.cols + pc];
            std::size_t k = 0;
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    for (int c = 0; c < 3; ++c)
                        out[(std::size_t(pr * p + y) * width + (pc * p + x)) * 3 + c] = vec[k++];
        }
    return out;
}

PatchGrid preprocess(const Image &img, int max_edge, int patch_size, const Normalization &norm) {
    const TargetDims t = fit_resolution(img.height, img.width, max_edge, patch_size);
    return patchify(resize_bilinear(img, t.height, t.width), patch_size, norm);
}

} // namespace vitmm
