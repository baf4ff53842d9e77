#include "vitmm/encoder.hpp"

#include <cmath>

namespace vitmm {

PackedBatch pack_batch(const std::vector<PatchGrid> &grids, const Weights &weights,
                       const EncoderConfig &cfg) {
    if (grids.empty()) throw DataError("pack_batch: empty image list");
    std::size_t total = 0;
    for (const auto &g : grids) total += std::size_t(g.rows) * g.cols;
    if (total > cfg.context_len)
        throw ContextOverflowError("packed length " + std::to_string(total) +
                                   " exceeds encoder context_len " +
                                   std::to_string(cfg.context_len));

    const TensorF &embed = weights.get("enc.patch_embed");
    const std::size_t patch_in = 3 * cfg.patch_size * cfg.patch_size;
    if (embed.shape != std::vector<std::size_t>{cfg.dim, patch_in})
        throw DimError("patch embedding shape does not match config");

    PackedBatch batch;
    batch.token_features = TensorF::zeros({total, cfg.dim});
    batch.positions.reserve(total);
    std::size_t cursor = 0;
    for (const auto &g : grids) {
        if (std::size_t(g.patch_size) != cfg.patch_size)
            throw DimError("patch grid patch_size does not match config");
        const std::size_t len = std::size_t(g.rows) * g.cols;
        batch.image_spans.push_back({cursor, len});
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c) {
                const auto &vec = g.patch_vectors[std::size_t(r) * g.cols + c];
                if (vec.size() != patch_in)
                    throw DimError("patch vector length does not match patch_size");
                for (std::size_t o = 0; o < cfg.dim; ++o) {
                    float acc = 0.f;
                    const float *wrow = embed.data.data() + o * patch_in;
                    for (std::size_t t = 0; t < patch_in; ++t) acc += wrow[t] * vec[t];
                    batch.token_features.at(cursor, o) = acc;
                }
                batch.positions.push_back({r, c});
                ++cursor;
            }
    }
    check_finite(batch.token_features, "patch embedding");

    batch.mask.assign(total * total, 0);
    for (const auto &span : batch.image_spans)
        for (std::size_t a = span.start; a < span.start + span.len; ++a)
            for (std::size_t b = span.start; b < span.start + span.len; ++b)
                batch.mask[a * total + b] = 1;
    return batch;
}

TensorF gated_ffn(const TensorF &x, const TensorF &w1, const TensorF &w2, const TensorF &w3) {
    TensorF h1 = linear(x, w1);
    TensorF h3 = linear(x, w3);
    for (std::size_t i = 0; i < h1.data.size(); ++i)
        h1.data[i] = silu(h1.data[i]) * h3.data[i];
    return linear(h1, w2);
}

namespace {

// Shared by encoder (rope2d, block mask, MHA) and reused conceptually by the
// decoder; kept local since grouping and position handling differ.
TensorF encoder_attention(const TensorF &xn, const Weights &w, std::size_t layer,
                          const EncoderConfig &cfg, const std::vector<GridPosition> &positions,
                          const std::vector<std::uint8_t> &mask, const std::vector<float> &freqs) {
    const std::string p = "enc.layers." + std::to_string(layer) + ".";
    const std::size_t n = xn.rows(), hd = cfg.head_dim;
    TensorF q = linear(xn, w.get(p + "wq"));
    TensorF k = linear(xn, w.get(p + "wk"));
    TensorF v = linear(xn, w.get(p + "wv"));

    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            rope2d_inplace(q.data.data() + t * cfg.dim + h * hd, hd, positions[t], freqs);
            rope2d_inplace(k.data.data() + t * cfg.dim + h * hd, hd, positions[t], freqs);
        }

    const float scale = 1.f / std::sqrt(float(hd));
    TensorF out = TensorF::zeros({n, cfg.dim});
    TensorF scores = TensorF::zeros({n, n});
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                float acc = 0.f;
                const float *qa = q.data.data() + a * cfg.dim + h * hd;
                const float *kb = k.data.data() + b * cfg.dim + h * hd;
                for (std::size_t t = 0; t < hd; ++t) acc += qa[t] * kb[t];
                scores.at(a, b) = acc * scale;
            }
        TensorF probs = softmax_rows(scores, &mask);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const float pv = probs.at(a, b);
                if (pv == 0.f) continue;
                const float *vb = v.data.data() + b * cfg.dim + h * hd;
                float *oa = out.data.data() + a * cfg.dim + h * hd;
                for (std::size_t t = 0; t < hd; ++t) oa[t] += pv * vb[t];
            }
    }
    return linear(out, w.get(p + "wo"));
}

} // namespace

TensorF encoder_forward(const PackedBatch &batch, const Weights &weights,
                        const EncoderConfig &cfg, double rope_base) {
    const std::size_t n = batch.size();
    if (batch.token_features.shape != std::vector<std::size_t>{n, cfg.dim})
        throw DimError("packed batch features do not match config dim");
    const std::vector<float> freqs = build_freqs<float>(cfg.head_dim, float(rope_base));

    TensorF h = batch.token_features;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "enc.layers." + std::to_string(l) + ".";
        try {
            TensorF xn = rmsnorm(h, weights.get(p + "attn_norm.gain"));
            TensorF attn = encoder_attention(xn, weights, l, cfg, batch.positions,
                                             batch.mask, freqs);
            for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += attn.data[i];

            TensorF fn = rmsnorm(h, weights.get(p + "ffn_norm.gain"));
            TensorF ffn = gated_ffn(fn, weights.get(p + "w1"), weights.get(p + "w2"),
                                    weights.get(p + "w3"));
            for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += ffn.data[i];
            check_finite(h, "encoder layer output", int(l));
        } catch (NumericError &e) {
            throw NumericError(e.what(), int(l));
        }
    }
    return rmsnorm(h, weights.get("enc.final_norm.gain"));
}

} // namespace vitmm
