#include "vitmm/assembly.hpp"

#include <cmath>

#include "vitmm/encoder.hpp"
#include "vitmm/rope.hpp"

namespace vitmm {

TokenLayout build_token_layout(int grid_rows, int grid_cols) {
    if (grid_rows < 1 || grid_cols < 1)
        throw DimError("token layout requires a non-empty grid");
    TokenLayout layout;
    layout.kinds.reserve(std::size_t(grid_rows) * grid_cols + grid_rows);
    for (int r = 0; r < grid_rows; ++r) {
        for (int c = 0; c < grid_cols; ++c) layout.kinds.push_back(TokenKind::PATCH);
        layout.kinds.push_back(r + 1 < grid_rows ? TokenKind::BREAK : TokenKind::END);
    }
    return layout;
}

TensorF project(const TensorF &encoder_out, const Weights &weights,
                const ProjectorConfig &cfg) {
    if (encoder_out.cols() != cfg.encoder_dim)
        throw DimError("projector input width does not match encoder dim");
    const TensorF &w1 = weights.get("proj.w1");
    const TensorF &b1 = weights.get("proj.b1");
    const TensorF &w2 = weights.get("proj.w2");
    const TensorF &b2 = weights.get("proj.b2");
    TensorF h = linear(encoder_out, w1);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j)
            h.at(i, j) = gelu(h.at(i, j) + b1.data[j]);
    TensorF out = linear(h, w2);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out.at(i, j) += b2.data[j];
    check_finite(out, "projector");
    return out;
}

std::vector<std::size_t> tokenize_bytes(const std::string &text) {
    std::vector<std::size_t> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(std::size_t(c));
    return ids;
}

MultimodalSequence assemble(const std::vector<SequenceItem> &order,
                            const std::vector<ProjectedImage> &images,
                            const Weights &weights, const DecoderConfig &cfg) {
    const TensorF &tok_embed = weights.get("dec.tok_embed");
    const TensorF &special = weights.get("dec.special_embed");
    if (tok_embed.shape != std::vector<std::size_t>{cfg.vocab_size, cfg.dim})
        throw DimError("token embedding table does not match config");
    if (special.shape != std::vector<std::size_t>{2, cfg.dim})
        throw DimError("special embedding table must have 2 rows");

    // count first so the overflow check precedes any copying
    std::size_t total = 0;
    for (const auto &item : order) {
        if (item.kind == SequenceItem::Kind::Text) {
            total += item.text_ids.size();
        } else {
            if (item.image_index >= images.size())
                throw DataError("assemble: image index out of range");
            const auto &img = images[item.image_index];
            total += std::size_t(img.grid_rows) * img.grid_cols + img.grid_rows;
        }
    }
    if (total > cfg.context_len)
        throw ContextOverflowError("assembled length " + std::to_string(total) +
                                   " exceeds decoder context_len " +
                                   std::to_string(cfg.context_len));

    MultimodalSequence seq;
    seq.embeddings = TensorF::zeros({total, cfg.dim});
    seq.kinds.reserve(total);
    seq.sources.reserve(total);

    std::size_t t = 0;
    auto emit_row = [&](const float *src, TokenKind kind, SourceRef ref) {
        std::copy(src, src + cfg.dim, seq.embeddings.data.data() + t * cfg.dim);
        seq.kinds.push_back(kind);
        seq.sources.push_back(ref);
        ++t;
    };

    for (const auto &item : order) {
        if (item.kind == SequenceItem::Kind::Text) {
            for (std::size_t id : item.text_ids) {
                if (id >= cfg.vocab_size)
                    throw DataError("text token id out of vocab range");
                emit_row(tok_embed.data.data() + id * cfg.dim, TokenKind::TEXT,
                         {SourceRef::Kind::Text, id, 0, 0, 0});
            }
        } else {
            const auto &img = images[item.image_index];
            if (img.features.shape !=
                std::vector<std::size_t>{std::size_t(img.grid_rows) * img.grid_cols, cfg.dim})
                throw DimError("projected image features do not match its grid");
            for (int r = 0; r < img.grid_rows; ++r) {
                for (int c = 0; c < img.grid_cols; ++c)
                    emit_row(img.features.data.data() +
                                 (std::size_t(r) * img.grid_cols + c) * cfg.dim,
                             TokenKind::PATCH,
                             {SourceRef::Kind::ImageCell, 0, item.image_index, r, c});
                if (r + 1 < img.grid_rows)
                    emit_row(special.data.data(), TokenKind::BREAK,
                             {SourceRef::Kind::ImageBreak, 0, item.image_index, r, 0});
                else
                    emit_row(special.data.data() + cfg.dim, TokenKind::END,
                             {SourceRef::Kind::ImageEnd, 0, item.image_index, r, 0});
            }
        }
    }
    return seq;
}

namespace {

TensorF decoder_attention(const TensorF &xn, const Weights &w, std::size_t layer,
                          const DecoderConfig &cfg, const std::vector<float> &freqs) {
    const std::string p = "dec.layers." + std::to_string(layer) + ".";
    const std::size_t n = xn.rows(), hd = cfg.head_dim;
    const std::size_t q_dim = cfg.n_heads * hd;
    const std::size_t kv_dim = cfg.n_kv_heads * hd;
    const std::size_t group = cfg.n_heads / cfg.n_kv_heads;

    TensorF q = linear(xn, w.get(p + "wq"));
    TensorF k = linear(xn, w.get(p + "wk"));
    TensorF v = linear(xn, w.get(p + "wv"));

    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t h = 0; h < cfg.n_heads; ++h)
            rope1d_inplace(q.data.data() + t * q_dim + h * hd, hd, long(t), freqs);
        for (std::size_t h = 0; h < cfg.n_kv_heads; ++h)
            rope1d_inplace(k.data.data() + t * kv_dim + h * hd, hd, long(t), freqs);
    }

    std::vector<std::uint8_t> causal(n * n, 0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b <= a; ++b) causal[a * n + b] = 1;

    const float scale = 1.f / std::sqrt(float(hd));
    TensorF out = TensorF::zeros({n, q_dim});
    TensorF scores = TensorF::zeros({n, n});
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const std::size_t kvh = h / group;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                float acc = 0.f;
                const float *qa = q.data.data() + a * q_dim + h * hd;
                const float *kb = k.data.data() + b * kv_dim + kvh * hd;
                for (std::size_t t = 0; t < hd; ++t) acc += qa[t] * kb[t];
                scores.at(a, b) = acc * scale;
            }
        TensorF probs = softmax_rows(scores, &causal);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b <= a; ++b) {
                const float pv = probs.at(a, b);
                const float *vb = v.data.data() + b * kv_dim + kvh * hd;
                float *oa = out.data.data() + a * q_dim + h * hd;
                for (std::size_t t = 0; t < hd; ++t) oa[t] += pv * vb[t];
            }
    }
    return linear(out, w.get(p + "wo"));
}

} // namespace

TensorF decoder_forward(const MultimodalSequence &seq, const Weights &weights,
                        const DecoderConfig &cfg, double rope_base) {
    const std::size_t n = seq.size();
    if (n == 0) throw DataError("decoder_forward: empty sequence");
    if (n > cfg.context_len)
        throw ContextOverflowError("sequence exceeds decoder context_len");
    const std::vector<float> freqs = build_freqs<float>(cfg.head_dim, float(rope_base));

    TensorF h = seq.embeddings;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "dec.layers." + std::to_string(l) + ".";
        try {
            TensorF xn = rmsnorm(h, weights.get(p + "attn_norm.gain"));
            TensorF attn = decoder_attention(xn, weights, l, cfg, freqs);
            for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += attn.data[i];

            TensorF fn = rmsnorm(h, weights.get(p + "ffn_norm.gain"));
            TensorF ffn = gated_ffn(fn, weights.get(p + "w1"), weights.get(p + "w2"),
                                    weights.get(p + "w3"));
            for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += ffn.data[i];
            check_finite(h, "decoder layer output", int(l));
        } catch (NumericError &e) {
            throw NumericError(e.what(), int(l));
        }
    }
    TensorF fin = rmsnorm(h, weights.get("dec.final_norm.gain"));
    return linear(fin, weights.get("dec.output"));
}

std::size_t greedy_next_token(const TensorF &logits) {
    if (logits.rows() == 0) throw DataError("empty logits");
    const std::size_t last = logits.rows() - 1;
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
        if (logits.at(last, j) > logits.at(last, best)) best = j;
    return best;
}

} // namespace vitmm
