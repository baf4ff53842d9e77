#include "vitmm/weights.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

namespace vitmm {

namespace {

std::string layer_name(const char *prefix, std::size_t layer, const char *what) {
    return std::string(prefix) + "." + std::to_string(layer) + "." + what;
}

} // namespace

std::vector<TensorSpec> encoder_weight_specs(const EncoderConfig &cfg) {
    using Init = TensorSpec::Init;
    std::vector<TensorSpec> specs;
    const std::size_t patch_in = 3 * cfg.patch_size * cfg.patch_size;
    specs.push_back({"enc.patch_embed", {cfg.dim, patch_in}});
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        specs.push_back({layer_name("enc.layers", l, "attn_norm.gain"), {cfg.dim}, Init::Ones});
        specs.push_back({layer_name("enc.layers", l, "wq"), {cfg.dim, cfg.dim}});
        specs.push_back({layer_name("enc.layers", l, "wk"), {cfg.dim, cfg.dim}});
        specs.push_back({layer_name("enc.layers", l, "wv"), {cfg.dim, cfg.dim}});
        specs.push_back({layer_name("enc.layers", l, "wo"), {cfg.dim, cfg.dim}});
        specs.push_back({layer_name("enc.layers", l, "ffn_norm.gain"), {cfg.dim}, Init::Ones});
        specs.push_back({layer_name("enc.layers", l, "w1"), {cfg.hidden_dim, cfg.dim}});
        specs.push_back({layer_name("enc.layers", l, "w2"), {cfg.dim, cfg.hidden_dim}});
        specs.push_back({layer_name("enc.layers", l, "w3"), {cfg.hidden_dim, cfg.dim}});
    }
    specs.push_back({"enc.final_norm.gain", {cfg.dim}, Init::Ones});
    return specs;
}

std::vector<TensorSpec> decoder_weight_specs(const DecoderConfig &cfg) {
    using Init = TensorSpec::Init;
    std::vector<TensorSpec> specs;
    const std::size_t q_dim = cfg.n_heads * cfg.head_dim;
    const std::size_t kv_dim = cfg.n_kv_heads * cfg.head_dim;
    specs.push_back({"dec.tok_embed", {cfg.vocab_size, cfg.dim}});
    specs.push_back({"dec.special_embed", {2, cfg.dim}}); // rows: BREAK, END
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        specs.push_back({layer_name("dec.layers", l, "attn_norm.gain"), {cfg.dim}, Init::Ones});
        specs.push_back({layer_name("dec.layers", l, "wq"), {q_dim, cfg.dim}});
        specs.push_back({layer_name("dec.layers", l, "wk"), {kv_dim, cfg.dim}});
        specs.push_back({layer_name("dec.layers", l, "wv"), {kv_dim, cfg.dim}});
        specs.push_back({layer_name("dec.layers", l, "wo"), {cfg.dim, q_dim}});
        specs.push_back({layer_name("dec.layers", l, "ffn_norm.gain"), {cfg.dim}, Init::Ones});
        specs.push_back({layer_name("dec.layers", l, "w1"), {cfg.hidden_dim, cfg.dim}});
        specs.push_back({layer_name("dec.layers", l, "w2"), {cfg.dim, cfg.hidden_dim}});
        specs.push_back({layer_name("dec.layers", l, "w3"), {cfg.hidden_dim, cfg.dim}});
    }
    specs.push_back({"dec.final_norm.gain", {cfg.dim}, Init::Ones});
    specs.push_back({"dec.output", {cfg.vocab_size, cfg.dim}});
    return specs;
}

std::vector<TensorSpec> projector_weight_specs(const ProjectorConfig &cfg) {
    using Init = TensorSpec::Init;
    return {
        {"proj.w1", {cfg.decoder_dim, cfg.encoder_dim}},
        {"proj.b1", {cfg.decoder_dim}, Init::Zeros},
        {"proj.w2", {cfg.decoder_dim, cfg.decoder_dim}},
        {"proj.b2", {cfg.decoder_dim}, Init::Zeros},
    };
}

Weights init_weights(const std::vector<TensorSpec> &specs, unsigned long seed) {
    Weights w;
    std::mt19937_64 rng(seed);
    for (const auto &spec : specs) {
        TensorF t = TensorF::zeros(spec.shape);
        switch (spec.init) {
            case TensorSpec::Init::Ones:
                std::fill(t.data.begin(), t.data.end(), 1.f);
                break;
            case TensorSpec::Init::Zeros:
                break;
            case TensorSpec::Init::FanIn: {
                const std::size_t fan_in = spec.shape.back();
                const float bound = 1.f / std::sqrt(float(fan_in));
                std::uniform_real_distribution<float> dist(-bound, bound);
                for (auto &v : t.data) v = dist(rng);
                break;
            }
        }
        if (!w.tensors.emplace(spec.name, std::move(t)).second)
            throw ConfigError("duplicate weight name: " + spec.name);
    }
    return w;
}

namespace {

constexpr char kMagic[4] = {'N', 'T', 'C', '1'};

std::uint64_t align8(std::uint64_t v) { return (v + 7) & ~std::uint64_t(7); }

void put_u64_le(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const std::uint8_t *p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

} // namespace

void save_weights(const Weights &w, const std::string &path) {
    nlohmann::json manifest = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto &[name, t] : w.tensors) {
        manifest.push_back({{"name", name},
                            {"dtype", "F32"},
                            {"shape", t.shape},
                            {"offset", offset}});
        offset = align8(offset + t.numel() * sizeof(float));
    }
    const std::string mjson = manifest.dump();

    std::string header;
    header.append(kMagic, 4);
    put_u64_le(header, mjson.size());
    header += mjson;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ContainerError("cannot open for write: " + tmp);
        out.write(header.data(), std::streamsize(header.size()));
        std::uint64_t written = 0;
        for (const auto &[name, t] : w.tensors) {
            (void)name;
            // assumes little-endian host, as does load
            out.write(reinterpret_cast<const char *>(t.data.data()),
                      std::streamsize(t.numel() * sizeof(float)));
            written += t.numel() * sizeof(float);
            while (written % 8 != 0) {
                out.put('\0');
                ++written;
            }
        }
        if (!out) throw ContainerError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ContainerError("rename failed: " + path);
}

Weights load_weights(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContainerError("cannot open weights file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ContainerError("bad container magic");
    const std::uint64_t mlen = get_u64_le(bytes.data() + 4);
    if (12 + mlen > bytes.size()) throw ContainerError("truncated manifest");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + std::ptrdiff_t(mlen));
    } catch (const nlohmann::json::exception &e) {
        throw ContainerError(std::string("manifest parse error: ") + e.what());
    }
    if (!manifest.is_array()) throw ContainerError("manifest must be an array");

    const std::uint8_t *payload = bytes.data() + 12 + mlen;
    const std::uint64_t payload_size = bytes.size() - 12 - mlen;

    Weights w;
    std::uint64_t prev_end = 0;
    bool first = true;
    for (const auto &entry : manifest) {
        std::string name, dtype;
        std::vector<std::size_t> shape;
        std::uint64_t offset = 0;
        try {
            name = entry.at("name").get<std::string>();
            dtype = entry.at("dtype").get<std::string>();
            shape = entry.at("shape").get<std::vector<std::size_t>>();
            offset = entry.at("offset").get<std::uint64_t>();
        } catch (const nlohmann::json::exception &e) {
            throw ContainerError(std::string("malformed manifest entry: ") + e.what());
        }
        if (dtype != "F32") throw ContainerError("unsupported dtype: " + dtype);
        if (offset % 8 != 0) throw ContainerError("misaligned offset for " + name);
        if (!first && offset < prev_end)
            throw ContainerError("overlapping or non-ascending offsets at " + name);
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        const std::uint64_t end = offset + std::uint64_t(n) * sizeof(float);
        if (end > payload_size)
            throw ContainerError("payload too short for tensor " + name);
        TensorF t = TensorF::zeros(shape);
        std::memcpy(t.data.data(), payload + offset, n * sizeof(float));
        if (!w.tensors.emplace(name, std::move(t)).second)
            throw ContainerError("duplicate tensor name: " + name);
        prev_end = end;
        first = false;
    }
    if (align8(prev_end) != payload_size && prev_end != payload_size)
        throw ContainerError("payload length does not match manifest");
    return w;
}

} // namespace vitmm
