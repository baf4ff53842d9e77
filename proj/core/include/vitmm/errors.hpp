#pragma once

#include <stdexcept>
#include <string>

namespace vitmm {

struct DimError : std::runtime_error {
    explicit DimError(const std::string &msg) : std::runtime_error(msg) {}
};

// Raised when a kernel produces NaN/Inf. `layer` is -1 when the failure is
// not attributable to a specific transformer layer.
struct NumericError : std::runtime_error {
    int layer;
    explicit NumericError(const std::string &msg, int layer_index = -1)
        : std::runtime_error(msg), layer(layer_index) {}
};

struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ContainerError : std::runtime_error {
    explicit ContainerError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ContextOverflowError : std::runtime_error {
    explicit ContextOverflowError(const std::string &msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

struct RemoteError : std::runtime_error {
    explicit RemoteError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace vitmm
