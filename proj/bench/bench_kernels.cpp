// Parallel kernels vs. the serial reference on the shapes the network
// actually runs (28x28/5x5 digit maps, 12x12 merge inputs, batch passes).

#include <benchmark/benchmark.h>

#include "msnn/network.hpp"
#include "msnn/ops.hpp"
#include "msnn/reference.hpp"
#include "msnn/rng.hpp"
#include "msnn/training.hpp"

using namespace msnn;

namespace {

Tensor2 random_map(int side, std::uint64_t seed) {
    Rng rng(seed);
    Tensor2 t(side, side);
    for (double& x : t.v) x = rng.uniform(0.0, 1.0);
    return t;
}

void bm_correlate(benchmark::State& state) {
    Tensor2 map = random_map(static_cast<int>(state.range(0)), 1);
    Tensor2 kernel = random_map(5, 2);
    for (auto _ : state) benchmark::DoNotOptimize(valid_cross_correlate(map, kernel, true));
}

void bm_correlate_ref(benchmark::State& state) {
    Tensor2 map = random_map(static_cast<int>(state.range(0)), 1);
    Tensor2 kernel = random_map(5, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ref::cross_correlate(map, kernel, true));
}

void bm_convolve(benchmark::State& state) {
    Tensor2 map = random_map(12, 3);
    Tensor2 kernel = random_map(5, 4);
    for (auto _ : state) benchmark::DoNotOptimize(valid_convolve(map, kernel));
}

void bm_convolve_ref(benchmark::State& state) {
    Tensor2 map = random_map(12, 3);
    Tensor2 kernel = random_map(5, 4);
    for (auto _ : state) benchmark::DoNotOptimize(ref::convolve(map, kernel));
}

void bm_downsample(benchmark::State& state) {
    Tensor2 map = random_map(24, 5);
    for (auto _ : state) benchmark::DoNotOptimize(avg_downsample(map, 2));
}

void bm_downsample_ref(benchmark::State& state) {
    Tensor2 map = random_map(24, 5);
    for (auto _ : state) benchmark::DoNotOptimize(ref::avg_downsample(map, 2));
}

MsnnNetwork bench_net() {
    ModuleBank bank = make_random_bank(16, 25, 10, 7);
    return build_network(bank, 28, 2, 280, 10, Activation::logistic, 7);
}

void bm_forward(benchmark::State& state) {
    MsnnNetwork net = bench_net();
    Tensor2 img = random_map(28, 8);
    for (auto _ : state) benchmark::DoNotOptimize(network_forward(img, net));
}

void bm_batch_gradients(benchmark::State& state) {
    MsnnNetwork net = bench_net();
    LabeledSet set;
    set.class_count = 10;
    for (int i = 0; i < 50; ++i)
        set.samples.push_back({random_map(28, 100 + i), i % 10});
    std::vector<std::uint32_t> idx(50);
    for (std::uint32_t i = 0; i < 50; ++i) idx[i] = i;
    for (auto _ : state) {
        BatchStats stats;
        benchmark::DoNotOptimize(batch_gradients(net, set, idx, 0, 50, stats));
    }
}

} // namespace

BENCHMARK(bm_correlate)->Arg(28)->Arg(64);
BENCHMARK(bm_correlate_ref)->Arg(28)->Arg(64);
BENCHMARK(bm_convolve);
BENCHMARK(bm_convolve_ref);
BENCHMARK(bm_downsample);
BENCHMARK(bm_downsample_ref);
BENCHMARK(bm_forward);
BENCHMARK(bm_batch_gradients);

BENCHMARK_MAIN();
