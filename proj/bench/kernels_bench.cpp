#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fedprov/kernels.hpp"
#include "fedprov/model.hpp"

namespace {

using namespace fedprov;

std::vector<LayeredParams> population(std::size_t n) {
    const auto arch = Architecture::simple_net({1, 16, 16}, 10);
    std::vector<LayeredParams> out;
    Rng rng(7);
    std::normal_distribution<double> g(0.0, 0.05);
    for (std::size_t i = 0; i < n; ++i) {
        LayeredParams p(arch.layer_specs());
        for (auto& v : p.values()) v = g(rng);
        out.push_back(std::move(p));
    }
    return out;
}

void BM_rank_serial(benchmark::State& st) {
    const auto pop = population(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(reference::rank_coordinates(pop));
}

void BM_rank_parallel(benchmark::State& st) {
    const auto pop = population(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(parallel::rank_coordinates(pop));
}

void BM_cam_serial(benchmark::State& st) {
    const auto pop = population(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(reference::conv_anomaly(pop, {}));
}

void BM_cam_parallel(benchmark::State& st) {
    const auto pop = population(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(parallel::conv_anomaly(pop, {}));
}

}  // namespace

BENCHMARK(BM_rank_serial)->Arg(10)->Arg(50);
BENCHMARK(BM_rank_parallel)->Arg(10)->Arg(50);
BENCHMARK(BM_cam_serial)->Arg(10)->Arg(50);
BENCHMARK(BM_cam_parallel)->Arg(10)->Arg(50);

BENCHMARK_MAIN();
