#include <random>

#include <benchmark/benchmark.h>

#include "vitmm/encoder.hpp"
#include "vitmm/eval.hpp"
#include "vitmm/rope.hpp"
#include "vitmm/tensor.hpp"

namespace {

using namespace vitmm;

TensorF random_tensor(std::size_t r, std::size_t c, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-1, 1);
    TensorF t = TensorF::zeros({r, c});
    for (auto &v : t.data) v = dist(rng);
    return t;
}

void BM_Matmul(benchmark::State &state) {
    const std::size_t n = std::size_t(state.range(0));
    TensorF a = random_tensor(n, n, 1), b = random_tensor(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128);

void BM_Rope2D(benchmark::State &state) {
    const std::size_t d = 64;
    auto freqs = build_freqs<float>(d, 10000.f);
    std::vector<float> x(d, 0.5f);
    for (auto _ : state) {
        auto y = x;
        rope2d_inplace(y.data(), d, {17, 23}, freqs);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(BM_Rope2D);

void BM_EncoderForward(benchmark::State &state) {
    EncoderConfig cfg;
    cfg.dim = 64;
    cfg.n_layers = 2;
    cfg.head_dim = 16;
    cfg.hidden_dim = 128;
    cfg.n_heads = 4;
    cfg.n_kv_heads = 4;
    cfg.patch_size = 4;
    cfg.context_len = 4096;
    Weights w = init_weights(encoder_weight_specs(cfg), 7);

    const int side = int(state.range(0));
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> dist(-1, 1);
    PatchGrid g;
    g.rows = g.cols = side;
    g.patch_size = 4;
    g.patch_vectors.resize(std::size_t(side) * side);
    for (auto &v : g.patch_vectors) {
        v.resize(48);
        for (auto &p : v) p = dist(rng);
    }
    PackedBatch batch = pack_batch({g}, w, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(encoder_forward(batch, w, cfg));
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(batch.size()));
}
BENCHMARK(BM_EncoderForward)->Arg(4)->Arg(8);

void BM_Anls(benchmark::State &state) {
    const std::string a = "the quick brown fox jumps over the lazy dog";
    const std::string b = "the quick brown fax jumps over a lazy dog";
    for (auto _ : state) benchmark::DoNotOptimize(anls(a, b));
}
BENCHMARK(BM_Anls);

void BM_ExtractAnswer(benchmark::State &state) {
    const std::string response =
        "The chart shows a steady increase over the period in question, and after "
        "comparing the two series carefully we can conclude.\nFinal Answer: 6000";
    for (auto _ : state)
        benchmark::DoNotOptimize(
            extract_answer(response, ParsingLevel::L3, AnswerType::NUMBER, {"6000"}));
}
BENCHMARK(BM_ExtractAnswer);

} // namespace

BENCHMARK_MAIN();
