#include "vitmm/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "vitmm/assembly.hpp"
#include "vitmm/encoder.hpp"
#include "vitmm/eval.hpp"
#include "vitmm/rope.hpp"
#include "vitmm/tensor.hpp"
#include "vitmm/weights.hpp"

namespace vitmm {

namespace {

bool tensor_suite(std::string &detail) {
    TensorF a({2, 2}, {1, 2, 3, 4});
    TensorF b({2, 2}, {5, 6, 7, 8});
    TensorF c = matmul(a, b);
    if (c.data != std::vector<float>{19, 22, 43, 50}) {
        detail = "matmul 2x2 mismatch";
        return false;
    }
    TensorF s = softmax_rows(TensorF({1, 2}, {1000.f, 1000.f}));
    if (std::fabs(s.data[0] - 0.5f) > 1e-6f) {
        detail = "softmax shift invariance";
        return false;
    }
    return true;
}

bool rope_suite(std::string &detail) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> val(-1, 1);
    std::uniform_int_distribution<int> pos(0, 31);
    const auto freqs = build_freqs<double>(64, 10000.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(64), y(64);
        for (auto &v : x) v = val(rng);
        for (auto &v : y) v = val(rng);
        GridPosition a{pos(rng), pos(rng)}, b{pos(rng), pos(rng)};
        auto xa = rope2d(x, a, freqs), yb = rope2d(y, b, freqs);
        auto xd = rope2d(x, {a.row - b.row, a.col - b.col}, freqs);
        auto y0 = rope2d(y, {0, 0}, freqs);
        double lhs = 0, rhs = 0;
        for (int i = 0; i < 64; ++i) {
            lhs += xa[i] * yb[i];
            rhs += xd[i] * y0[i];
        }
        if (std::fabs(lhs - rhs) > 1e-10) {
            detail = "relative property violated";
            return false;
        }
    }
    return true;
}

bool packing_suite(std::string &detail) {
    EncoderConfig cfg;
    cfg.dim = 32;
    cfg.n_layers = 2;
    cfg.head_dim = 8;
    cfg.hidden_dim = 48;
    cfg.n_heads = 4;
    cfg.n_kv_heads = 4;
    cfg.patch_size = 2;
    cfg.context_len = 256;
    Weights w = init_weights(encoder_weight_specs(cfg), 11);

    auto random_grid = [&](int rows, int cols, unsigned seed) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<float> val(0.f, 1.f);
        PatchGrid g;
        g.rows = rows;
        g.cols = cols;
        g.patch_size = int(cfg.patch_size);
        for (int i = 0; i < rows * cols; ++i) {
            std::vector<float> v(3 * cfg.patch_size * cfg.patch_size);
            for (auto &x : v) x = val(rng);
            g.patch_vectors.push_back(std::move(v));
        }
        return g;
    };
    PatchGrid ga = random_grid(2, 3, 1), gb = random_grid(3, 2, 2);
    TensorF both = encoder_forward(pack_batch({ga, gb}, w, cfg), w, cfg);
    TensorF alone = encoder_forward(pack_batch({ga}, w, cfg), w, cfg);
    for (std::size_t i = 0; i < alone.data.size(); ++i)
        if (std::fabs(both.data[i] - alone.data[i]) > 1e-5f) {
            detail = "packed output differs from solo forward";
            return false;
        }
    return true;
}

bool layout_suite(std::string &detail) {
    if (build_token_layout(64, 64).kinds.size() != 4160 ||
        build_token_layout(2, 3).kinds.size() != 8 ||
        build_token_layout(1, 1).kinds.size() != 2) {
        detail = "token layout count law";
        return false;
    }
    return true;
}

bool parsing_suite(std::string &detail) {
    auto at = AnswerType::LETTER;
    if (extract_answer("reasoning... Final Answer: B", ParsingLevel::BASELINE, at).text != "B" ||
        extract_answer("reasoning... Answer: B", ParsingLevel::BASELINE, at).text.has_value() ||
        extract_answer("reasoning... Answer: B", ParsingLevel::L1, at).text != "B" ||
        extract_answer("**Answer:** B", ParsingLevel::L2, at).text != "B") {
        detail = "parsing golden mismatch";
        return false;
    }
    if (std::fabs(anls("hello", "helo") - 0.8) > 1e-12) {
        detail = "anls(hello, helo) != 0.8";
        return false;
    }
    return true;
}

bool container_suite(std::string &detail) {
    ProjectorConfig cfg{16, 24};
    Weights w = init_weights(projector_weight_specs(cfg), 5);
    const std::string path =
        (std::filesystem::temp_directory_path() / "vitmm_selftest.ntc").string();
    save_weights(w, path);
    Weights r = load_weights(path);
    std::filesystem::remove(path);
    if (!(r == w)) {
        detail = "container round trip not bit-exact";
        return false;
    }
    return true;
}

} // namespace

std::vector<SuiteResult> run_selftest_suites() {
    std::vector<SuiteResult> out;
    auto run = [&](const char *name, bool (*fn)(std::string &)) {
        SuiteResult res;
        res.name = name;
        try {
            res.passed = fn(res.detail);
        } catch (const std::exception &e) {
            res.passed = false;
            res.detail = e.what();
        }
        out.push_back(std::move(res));
    };
    run("tensor-kernels", tensor_suite);
    run("rope2d-relative", rope_suite);
    run("packing-isolation", packing_suite);
    run("token-layout", layout_suite);
    run("answer-parsing", parsing_suite);
    run("weights-container", container_suite);
    return out;
}

} // namespace vitmm
