#pragma once

// Dense row-major tensor and the small set of kernels the models are built
// from. Templated on the scalar type: float is the working precision,
// double is used by oracle tests.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vitmm/errors.hpp"

namespace vitmm {

template <class T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<T> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel())
            throw DimError("tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = 1;
        for (auto e : s) n *= e;
        return Tensor(std::move(s), std::vector<T>(n, T(0)));
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        return n;
    }

    // 2-D accessors
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    T &at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    T at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    bool operator==(const Tensor &o) const { return shape == o.shape && data == o.data; }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <class T>
inline void check_finite(const Tensor<T> &t, const char *what, int layer = -1) {
    for (T v : t.data)
        if (!std::isfinite(v))
            throw NumericError(std::string("non-finite value in ") + what, layer);
}

template <class T>
Tensor<T> matmul(const Tensor<T> &a, const Tensor<T> &b) {
    if (a.shape.size() != 2 || b.shape.size() != 2)
        throw DimError("matmul expects 2-D tensors");
    if (a.shape[1] != b.shape[0])
        throw DimError("matmul inner dimensions disagree");
    const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor<T> c = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const T *arow = a.data.data() + i * k;
        T *crow = c.data.data() + i * n;
        for (std::size_t t = 0; t < k; ++t) {
            const T av = arow[t];
            const T *brow = b.data.data() + t * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    check_finite(c, "matmul");
    return c;
}

// y = x W^T for W stored [out, in]. The layout every projection in the
// models uses.
template <class T>
Tensor<T> linear(const Tensor<T> &x, const Tensor<T> &w) {
    if (x.shape.size() != 2 || w.shape.size() != 2)
        throw DimError("linear expects 2-D tensors");
    if (x.shape[1] != w.shape[1])
        throw DimError("linear input width does not match weight fan-in");
    const std::size_t m = x.shape[0], k = x.shape[1], n = w.shape[0];
    Tensor<T> y = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t o = 0; o < n; ++o) {
            T acc = 0;
            const T *xrow = x.data.data() + i * k;
            const T *wrow = w.data.data() + o * k;
            for (std::size_t t = 0; t < k; ++t) acc += xrow[t] * wrow[t];
            y.data[i * n + o] = acc;
        }
    check_finite(y, "linear");
    return y;
}

// Row softmax with max-subtraction. `mask`, when given, is row-major m*n;
// nonzero entries are kept, zero entries produce exact zeros in the output.
template <class T>
Tensor<T> softmax_rows(const Tensor<T> &a, const std::vector<std::uint8_t> *mask = nullptr) {
    if (a.shape.size() != 2) throw DimError("softmax_rows expects a 2-D tensor");
    const std::size_t m = a.shape[0], n = a.shape[1];
    if (mask && mask->size() != m * n)
        throw DimError("softmax mask size does not match tensor");
    Tensor<T> out = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        T mx = -std::numeric_limits<T>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask && !(*mask)[i * n + j]) continue;
            any = true;
            mx = std::max(mx, a.at(i, j));
        }
        if (!any) throw NumericError("softmax row fully masked");
        T denom = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask && !(*mask)[i * n + j]) continue;
            const T e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            denom += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= denom;
    }
    check_finite(out, "softmax_rows");
    return out;
}

// y[i] = gain[i] * x[i] / sqrt(mean(x^2) + eps), applied per row of x.
template <class T>
Tensor<T> rmsnorm(const Tensor<T> &x, const Tensor<T> &gain, T eps = T(1e-5)) {
    const std::size_t n = x.cols();
    if (gain.numel() != n) throw DimError("rmsnorm gain length mismatch");
    Tensor<T> y = Tensor<T>::zeros(x.shape);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        T ss = 0;
        for (std::size_t j = 0; j < n; ++j) ss += x.at(i, j) * x.at(i, j);
        const T inv = T(1) / std::sqrt(ss / T(n) + eps);
        for (std::size_t j = 0; j < n; ++j)
            y.at(i, j) = gain.data[j] * x.at(i, j) * inv;
    }
    check_finite(y, "rmsnorm");
    return y;
}

// tanh-approximation GELU: 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715 x^3)))
template <class T>
inline T gelu(T x) {
    const T c = T(0.7978845608028654); // sqrt(2/pi)
    return T(0.5) * x * (T(1) + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <class T>
inline T silu(T x) {
    return x / (T(1) + std::exp(-x));
}

} // namespace vitmm
