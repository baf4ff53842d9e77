#pragma once

// Named-tensor parameter store: deterministic seeded init plus the "NTC1"
// container file (magic, little-endian u64 manifest length, JSON manifest,
// raw little-endian f32 payload at 8-byte-aligned offsets).

#include <map>
#include <string>
#include <vector>

#include "vitmm/config.hpp"
#include "vitmm/tensor.hpp"

namespace vitmm {

struct Weights {
    std::map<std::string, TensorF> tensors;

    const TensorF &get(const std::string &name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ConfigError("missing weight tensor: " + name);
        return it->second;
    }
    bool operator==(const Weights &o) const { return tensors == o.tensors; }
};

struct TensorSpec {
    std::string name;
    std::vector<std::size_t> shape;
    enum class Init { FanIn, Ones, Zeros } init = Init::FanIn;
};

std::vector<TensorSpec> encoder_weight_specs(const EncoderConfig &cfg);
std::vector<TensorSpec> decoder_weight_specs(const DecoderConfig &cfg);
std::vector<TensorSpec> projector_weight_specs(const ProjectorConfig &cfg);

// Matrices: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) from a seeded
// generator; norm gains start at 1, biases at 0. Same seed, same bytes.
Weights init_weights(const std::vector<TensorSpec> &specs, unsigned long seed);

void save_weights(const Weights &w, const std::string &path);
Weights load_weights(const std::string &path);

} // namespace vitmm
