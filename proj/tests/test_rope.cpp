#include <doctest.h>

#include <cmath>
#include <random>

#include "vitmm/rope.hpp"

using namespace vitmm;

namespace {

// explicit block-diagonal 4x4 rotation, the oracle for d=4
std::vector<double> rope2d_matrix_oracle(const std::vector<double> &x, int i, int j,
                                         const std::vector<double> &freqs) {
    const double t1 = i * freqs[0], t2 = j * freqs[1];
    const double m[4][4] = {{std::cos(t1), -std::sin(t1), 0, 0},
                            {std::sin(t1), std::cos(t1), 0, 0},
                            {0, 0, std::cos(t2), -std::sin(t2)},
                            {0, 0, std::sin(t2), std::cos(t2)}};
    std::vector<double> y(4, 0.0);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) y[r] += m[r][c] * x[c];
    return y;
}

template <class T>
double dot(const std::vector<T> &a, const std::vector<T> &b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * double(b[i]);
    return acc;
}

template <class T>
double norm(const std::vector<T> &a) {
    return std::sqrt(dot(a, a));
}

} // namespace

TEST_CASE("frequency ladder") {
    auto f = build_freqs<double>(4, 10000.0);
    CHECK(f[0] == doctest::Approx(1.0));
    CHECK(f[1] == doctest::Approx(0.01));

    auto f2 = build_freqs<double>(2, 123.0);
    CHECK(f2.size() == 1);
    CHECK(f2[0] == doctest::Approx(1.0));

    auto f64 = build_freqs<double>(64, 10000.0);
    for (std::size_t m = 1; m < f64.size(); ++m) CHECK(f64[m] < f64[m - 1]);

    CHECK_THROWS_AS(build_freqs<double>(3, 10000.0), DimError);
}

TEST_CASE("rope1d") {
    auto freqs = build_freqs<double>(4, 10000.0);
    std::vector<double> x = {0.3, -0.7, 1.1, 0.2};
    CHECK(rope1d(x, 0, freqs) == x);

    auto f1 = std::vector<double>{1.0};
    auto y = rope1d(std::vector<double>{1.0, 0.0}, 1, f1);
    CHECK(y[0] == doctest::Approx(std::cos(1.0)));
    CHECK(y[1] == doctest::Approx(std::sin(1.0)));

    auto rotated = rope1d(x, 17, freqs);
    CHECK(norm(rotated) == doctest::Approx(norm(x)).epsilon(1e-6));

    CHECK_THROWS_AS(rope1d(std::vector<double>{1, 2, 3}, 1, f1), DimError);
}

TEST_CASE("rope2d matches the explicit d=4 matrix") {
    auto freqs = build_freqs<double>(4, 10000.0);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(4);
        for (auto &v : x) v = dist(rng);
        const int i = trial % 7, j = (trial * 3) % 5;
        auto got = rope2d(x, {i, j}, freqs);
        auto want = rope2d_matrix_oracle(x, i, j, freqs);
        for (int k = 0; k < 4; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
}

TEST_CASE("rope2d identity at the origin") {
    auto freqs = build_freqs<double>(8, 10000.0);
    std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(rope2d(x, {0, 0}, freqs) == x);
}

TEST_CASE("rope2d relative property, f64 oracle mode") {
    const std::size_t d = 64;
    auto freqs = build_freqs<double>(d, 10000.0);
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> val(-1, 1);
    std::uniform_int_distribution<int> pos(0, 31);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(d), y(d);
        for (auto &v : x) v = val(rng);
        for (auto &v : y) v = val(rng);
        const GridPosition a{pos(rng), pos(rng)}, b{pos(rng), pos(rng)};
        const double lhs = dot(rope2d(x, a, freqs), rope2d(y, b, freqs));
        const double rhs =
            dot(rope2d(x, {a.row - b.row, a.col - b.col}, freqs), rope2d(y, {0, 0}, freqs));
        CHECK(std::fabs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("rope2d relative property, f32 working precision") {
    const std::size_t d = 64;
    auto freqs = build_freqs<float>(d, 10000.f);
    std::mt19937 rng(13);
    std::uniform_real_distribution<float> val(-1, 1);
    std::uniform_int_distribution<int> pos(0, 31);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<float> x(d), y(d);
        for (auto &v : x) v = val(rng);
        for (auto &v : y) v = val(rng);
        const GridPosition a{pos(rng), pos(rng)}, b{pos(rng), pos(rng)};
        const double lhs = dot(rope2d(x, a, freqs), rope2d(y, b, freqs));
        const double rhs =
            dot(rope2d(x, {a.row - b.row, a.col - b.col}, freqs), rope2d(y, {0, 0}, freqs));
        CHECK(std::fabs(lhs - rhs) < 1e-5);
    }
}

TEST_CASE("rope2d norm preservation and linearity") {
    auto freqs = build_freqs<double>(16, 10000.0);
    std::mt19937 rng(14);
    std::uniform_real_distribution<double> val(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(16), y(16);
        for (auto &v : x) v = val(rng);
        for (auto &v : y) v = val(rng);
        const GridPosition p{trial % 9, trial % 13};
        CHECK(norm(rope2d(x, p, freqs)) == doctest::Approx(norm(x)).epsilon(1e-6));

        const double a = val(rng), b = val(rng);
        std::vector<double> combo(16);
        for (int i = 0; i < 16; ++i) combo[i] = a * x[i] + b * y[i];
        auto lhs = rope2d(combo, p, freqs);
        auto rx = rope2d(x, p, freqs), ry = rope2d(y, p, freqs);
        for (int i = 0; i < 16; ++i)
            CHECK(lhs[i] == doctest::Approx(a * rx[i] + b * ry[i]).epsilon(1e-6));
    }
}

TEST_CASE("rope2d coordinate rotations compose") {
    auto freqs = build_freqs<double>(16, 10000.0);
    std::vector<double> x(16);
    for (int i = 0; i < 16; ++i) x[i] = 0.1 * i - 0.8;
    auto direct = rope2d(x, {5, 9}, freqs);
    auto staged = rope2d(rope2d(x, {5, 0}, freqs), {0, 9}, freqs);
    for (int i = 0; i < 16; ++i) CHECK(direct[i] == doctest::Approx(staged[i]).epsilon(1e-12));

    // j = 0 leaves the width pairs alone
    auto h_only = rope2d(x, {3, 0}, freqs);
    for (std::size_t m = 1; m < 8; m += 2) { // even (1-based) pairs
        CHECK(h_only[2 * m] == x[2 * m]);
        CHECK(h_only[2 * m + 1] == x[2 * m + 1]);
    }
}
