#include <benchmark/benchmark.h>

#include "fitolab/catalog.hpp"
#include "fitolab/process.hpp"

static void Reconstruct(benchmark::State& state) {
    const std::size_t steps = static_cast<std::size_t>(state.range(0));
    const auto f = fitolab::make_functional("quadratic");
    const fitolab::WienerBatch batch(fitolab::make_uniform_grid(1.0, steps), 1, 256, 3);
    const auto phi = fitolab::integrand_from_functional(f, batch, {}, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fitolab::reconstruct(0.0, phi, 1));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(steps * 256));
}
BENCHMARK(Reconstruct)->RangeMultiplier(4)->Range(256, 4096);

BENCHMARK_MAIN();
