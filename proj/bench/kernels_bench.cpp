#include "kpe/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

kpe::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    kpe::Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kpe::kernels::matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

void BM_MatmulReference(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kpe::kernels::reference::matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

void BM_SoftmaxRows(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(n, n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(kpe::kernels::softmax_rows(x));
}

void BM_SoftmaxRowsReference(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(n, n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(kpe::kernels::reference::softmax_rows(x));
}

void BM_LayerNorm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(n, n, 4);
    std::vector<double> gain(n, 1.0), bias(n, 0.0), inv_std;
    kpe::Matrix normalized;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kpe::kernels::layer_norm_rows(x, gain, bias, 1e-5, normalized, inv_std));
    }
}

void BM_LayerNormReference(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(n, n, 4);
    std::vector<double> gain(n, 1.0), bias(n, 0.0), inv_std;
    kpe::Matrix normalized;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            kpe::kernels::reference::layer_norm_rows(x, gain, bias, 1e-5, normalized, inv_std));
    }
}

}  // namespace

BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_MatmulReference)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_SoftmaxRows)->Arg(256)->Arg(1024);
BENCHMARK(BM_SoftmaxRowsReference)->Arg(256)->Arg(1024);
BENCHMARK(BM_LayerNorm)->Arg(256)->Arg(1024);
BENCHMARK(BM_LayerNormReference)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
