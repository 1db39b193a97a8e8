#include <benchmark/benchmark.h>

#include "fitolab/catalog.hpp"
#include "fitolab/derivatives.hpp"
#include "fitolab/wiener.hpp"

// cost of one scenario of finite-difference integrand rows
static void IntegrandRows(benchmark::State& state) {
    const std::size_t steps = static_cast<std::size_t>(state.range(0));
    const auto f = fitolab::make_functional("inverse-bessel");
    const fitolab::WienerBatch batch(fitolab::make_uniform_grid(1.0, steps), 3, 1 << 16, 7);
    const fitolab::FdOptions opt;
    std::vector<double> grad(3);
    std::size_t scenario = 0;
    for (auto _ : state) {
        const fitolab::Path path = batch.path(scenario++ % batch.scenarios());
        fitolab::BumpEvaluator ev(f, path.view());
        for (std::size_t k = 0; k < steps; ++k) {
            ev.vertical(k, opt, grad);
            benchmark::DoNotOptimize(grad.data());
        }
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(steps));
}
BENCHMARK(IntegrandRows)->RangeMultiplier(4)->Range(256, 4096);

BENCHMARK_MAIN();
