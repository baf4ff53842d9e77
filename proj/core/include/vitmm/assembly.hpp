#pragma once

// Multimodal sequence assembly and the causal decoder: project encoder
// outputs into decoder space, insert break/end embeddings between image
// rows, interleave with byte-level text tokens, run grouped-KV causal
// attention with 1D rotary positions.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vitmm/config.hpp"
#include "vitmm/tensor.hpp"
#include "vitmm/weights.hpp"

namespace vitmm {

enum class TokenKind { TEXT, PATCH, BREAK, END };

struct TokenLayout {
    std::vector<TokenKind> kinds; // H_p*W_p + H_p entries, no TEXT
};

// Row-major PATCH runs separated by BREAK (H_p-1 of them), one END last.
TokenLayout build_token_layout(int grid_rows, int grid_cols);

struct SourceRef {
    // text token id, or image index plus grid cell
    enum class Kind { Text, ImageCell, ImageBreak, ImageEnd } kind;
    std::size_t text_id = 0;
    std::size_t image = 0;
    int grid_row = 0;
    int grid_col = 0;
};

struct MultimodalSequence {
    TensorF embeddings; // T x decoder dim
    std::vector<TokenKind> kinds;
    std::vector<SourceRef> sources;
    std::size_t size() const { return kinds.size(); }
};

// Projected image: decoder-space patch features plus the grid they came from.
struct ProjectedImage {
    TensorF features; // (H_p*W_p) x decoder dim
    int grid_rows = 0;
    int grid_cols = 0;
};

// Two-layer projector with GELU between; widths from ProjectorConfig.
TensorF project(const TensorF &encoder_out, const Weights &weights,
                const ProjectorConfig &cfg);

// One element per interleaving slot: a text-token run or an image index.
struct SequenceItem {
    enum class Kind { Text, Image } kind;
    std::vector<std::size_t> text_ids; // Kind::Text
    std::size_t image_index = 0;       // Kind::Image
};

MultimodalSequence assemble(const std::vector<SequenceItem> &order,
                            const std::vector<ProjectedImage> &images,
                            const Weights &weights, const DecoderConfig &cfg);

// Convenience: text bytes first, then all images in order.
std::vector<std::size_t> tokenize_bytes(const std::string &text);

TensorF decoder_forward(const MultimodalSequence &seq, const Weights &weights,
                        const DecoderConfig &cfg, double rope_base = 10000.0);

std::size_t greedy_next_token(const TensorF &logits);

} // namespace vitmm
