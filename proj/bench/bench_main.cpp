// Serial reference vs OpenMP kernels: Monte Carlo replications and the threshold grid.
#include <benchmark/benchmark.h>

#include <thread>

#include "designs.hpp"
#include "setpar/estimation.hpp"
#include "setpar/mc_study.hpp"

namespace {

setpar::McDesign design(std::size_t n) {
    setpar::McDesign d;
    d.truth = setpar::testing::r6_truth();
    d.sample_sizes = {n};
    d.replications = 16;
    d.base_seed = 5;
    return d;
}

int hw_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void BM_mc_serial(benchmark::State& state) {
    const auto d = design(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(setpar::run_mc_serial(d));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.replications));
}

void BM_mc_parallel(benchmark::State& state) {
    const auto d = design(static_cast<std::size_t>(state.range(0)));
    const int workers = hw_threads();
    for (auto _ : state) benchmark::DoNotOptimize(setpar::run_mc(d, workers));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.replications));
    state.counters["workers"] = workers;
}

// range(0): n, range(1): 0 cold serial, 1 warm serial, 2 parallel grid.
void BM_fit_grid(benchmark::State& state) {
    const auto sim = setpar::simulate(setpar::testing::r7_truth(), static_cast<std::size_t>(state.range(0)), 9);
    setpar::FitConfig cfg;
    cfg.warm_start = state.range(1) == 1;
    cfg.workers = state.range(1) == 2 ? hw_threads() : 1;
    for (auto _ : state) benchmark::DoNotOptimize(setpar::fit(sim.series, cfg));
}

}  // namespace

BENCHMARK(BM_mc_serial)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_mc_parallel)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_fit_grid)->ArgsProduct({{1000, 4000}, {0, 1, 2}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
