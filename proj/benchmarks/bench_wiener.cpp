#include <benchmark/benchmark.h>

#include "fitolab/wiener.hpp"

static void PathGeneration(benchmark::State& state) {
    const std::size_t steps = static_cast<std::size_t>(state.range(0));
    const fitolab::WienerBatch batch(fitolab::make_uniform_grid(1.0, steps), 3, 1 << 20, 42);
    std::size_t scenario = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(batch.path(scenario++ % batch.scenarios()));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(steps * 3));
}
BENCHMARK(PathGeneration)->RangeMultiplier(4)->Range(256, 16384);

BENCHMARK_MAIN();
