#pragma once

// Vision encoder forward pass over packed sequences: patch embedding,
// pre-norm attention blocks with 2D rotary q/k and a block-diagonal mask,
// gated FFN. The encoder sees only patch tokens; break/end embeddings are
// inserted later, at assembly.

#include <cstdint>
#include <utility>
#include <vector>

#include "vitmm/config.hpp"
#include "vitmm/image.hpp"
#include "vitmm/rope.hpp"
#include "vitmm/tensor.hpp"
#include "vitmm/weights.hpp"

namespace vitmm {

struct ImageSpan {
    std::size_t start = 0;
    std::size_t len = 0;
};

struct PackedBatch {
    TensorF token_features;             // N x dim, patch-embedded
    std::vector<GridPosition> positions; // per token
    std::vector<ImageSpan> image_spans;
    std::vector<std::uint8_t> mask;      // N*N, nonzero iff same span
    std::size_t size() const { return positions.size(); }
};

PackedBatch pack_batch(const std::vector<PatchGrid> &grids, const Weights &weights,
                       const EncoderConfig &cfg);

// y = W2 (SiLU(W1 x) ⊙ W3 x), no biases. x is rows of tokens.
TensorF gated_ffn(const TensorF &x, const TensorF &w1, const TensorF &w2, const TensorF &w3);

TensorF encoder_forward(const PackedBatch &batch, const Weights &weights,
                        const EncoderConfig &cfg, double rope_base = 10000.0);

} // namespace vitmm
