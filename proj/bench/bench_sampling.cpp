#include <benchmark/benchmark.h>

#include "mlmc/driver.hpp"
#include "mlmc/sampler.hpp"

using namespace mlmc;

namespace {

PricingSampler lookback_sampler() {
    PayoffSpec p;
    p.family = PayoffFamily::lookback;
    return PricingSampler(make_model("gbm", {{"r", 0.05}, {"sigma", 0.2}, {"x0", 1.0}}), p, 1.0);
}

void BM_LevelSerial(benchmark::State& state) {
    const PricingSampler sampler = lookback_sampler();
    const LevelGrid grid = LevelGrid::make(int(state.range(0)), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_level_serial(sampler, grid, 7, 0, 20000).mean_diff());
    }
    state.SetItemsProcessed(state.iterations() * 20000);
}

void BM_LevelParallel(benchmark::State& state) {
    const PricingSampler sampler = lookback_sampler();
    const LevelGrid grid = LevelGrid::make(int(state.range(0)), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_level(sampler, grid, 7, 0, 20000).mean_diff());
    }
    state.SetItemsProcessed(state.iterations() * 20000);
}

}  // namespace

BENCHMARK(BM_LevelSerial)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LevelParallel)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
