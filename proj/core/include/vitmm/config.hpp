#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "vitmm/image.hpp"

namespace vitmm {

struct EncoderConfig {
    std::size_t dim = 64;
    std::size_t n_layers = 2;
    std::size_t head_dim = 16;
    std::size_t hidden_dim = 128;
    std::size_t n_heads = 4;
    std::size_t n_kv_heads = 4;
    std::size_t context_len = 4096;
    std::size_t patch_size = 16;

    // Published encoder column: 1024/24/64/4096/16/16/4096, patch 16.
    static EncoderConfig published();
    void validate() const;
};

struct DecoderConfig {
    std::size_t dim = 64;
    std::size_t n_layers = 2;
    std::size_t head_dim = 8;
    std::size_t hidden_dim = 128;
    std::size_t n_heads = 8;
    std::size_t n_kv_heads = 2;
    std::size_t context_len = 8192;
    std::size_t vocab_size = 259; // bytes + BREAK/END/PAD

    // Published decoder column: 5120/40/128/14336/32/8/131072/131072.
    static DecoderConfig published();
    void validate() const;
};

struct ProjectorConfig {
    std::size_t encoder_dim = 64;
    std::size_t decoder_dim = 64;
    void validate() const;
};

// Byte-level tokenizer specials.
inline constexpr std::size_t kTokenBreak = 256;
inline constexpr std::size_t kTokenEnd = 257;
inline constexpr std::size_t kTokenPad = 258;

struct RunConfig {
    EncoderConfig encoder;
    DecoderConfig decoder;
    int max_edge = 1024;
    double rope_base = 10000.0;
    Normalization normalization;
    unsigned long seed = 0;

    ProjectorConfig projector() const { return {encoder.dim, decoder.dim}; }
    void validate() const;

    static RunConfig from_json_text(const std::string &text);
    static RunConfig load(const std::string &path);
    std::string to_json_text() const;
};

} // namespace vitmm
