#pragma once

// Rotary position transforms. rope1d rotates consecutive feature pairs by
// pos * theta_m. rope2d alternates height/width angles across pairs: pair m
// (1-based) rotates by i*theta_m for odd m and j*theta_m for even m, so the
// height ladder is theta_1, theta_3, ... and the width ladder is
// theta_2, theta_4, ...

#include <cmath>
#include <cstddef>
#include <vector>

#include "vitmm/errors.hpp"

namespace vitmm {

struct GridPosition {
    int row = 0; // i, height index
    int col = 0; // j, width index
};

// theta_m = base^(-2(m-1)/d), m = 1..d/2
template <class T>
std::vector<T> build_freqs(std::size_t d, T base) {
    if (d < 2 || d % 2 != 0) throw DimError("rope feature dimension must be even and >= 2");
    if (!(base > 0)) throw DimError("rope base must be positive");
    std::vector<T> freqs(d / 2);
    for (std::size_t m = 1; m <= d / 2; ++m)
        freqs[m - 1] = std::pow(base, -T(2 * (m - 1)) / T(d));
    return freqs;
}

template <class T>
void rope1d_inplace(T *x, std::size_t d, long pos, const std::vector<T> &freqs) {
    if (freqs.size() != d / 2) throw DimError("rope1d frequency vector length mismatch");
    for (std::size_t m = 0; m < d / 2; ++m) {
        const T ang = T(pos) * freqs[m];
        const T c = std::cos(ang), s = std::sin(ang);
        const T a = x[2 * m], b = x[2 * m + 1];
        x[2 * m] = a * c - b * s;
        x[2 * m + 1] = a * s + b * c;
    }
}

template <class T>
std::vector<T> rope1d(std::vector<T> x, long pos, const std::vector<T> &freqs) {
    if (x.size() != 2 * freqs.size()) throw DimError("rope1d vector length mismatch");
    rope1d_inplace(x.data(), x.size(), pos, freqs);
    return x;
}

template <class T>
void rope2d_inplace(T *x, std::size_t d, GridPosition pos, const std::vector<T> &freqs) {
    if (d % 2 != 0 || (d / 2) % 2 != 0)
        throw DimError("rope2d requires d divisible by 4");
    if (freqs.size() != d / 2) throw DimError("rope2d frequency vector length mismatch");
    for (std::size_t m = 0; m < d / 2; ++m) {
        // odd pair (m even 0-based): height; even pair: width
        const long p = (m % 2 == 0) ? pos.row : pos.col;
        const T ang = T(p) * freqs[m];
        const T c = std::cos(ang), s = std::sin(ang);
        const T a = x[2 * m], b = x[2 * m + 1];
        x[2 * m] = a * c - b * s;
        x[2 * m + 1] = a * s + b * c;
    }
}

template <class T>
std::vector<T> rope2d(std::vector<T> x, GridPosition pos, const std::vector<T> &freqs) {
    if (x.size() != 2 * freqs.size()) throw DimError("rope2d vector length mismatch");
    rope2d_inplace(x.data(), x.size(), pos, freqs);
    return x;
}

} // namespace vitmm
