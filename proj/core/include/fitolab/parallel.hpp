#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fitolab {

/// Scenarios are swept in fixed chunks of this size. Per-chunk partial
/// results are merged in chunk order, so every reduction is bitwise
/// independent of the worker count (workers only race for whole chunks).
inline constexpr std::size_t kScenarioChunk = 256;

/// 0 means hardware concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested);

/// Runs work(state, begin, end) over [0, count) in kScenarioChunk chunks and
/// returns the per-chunk states in chunk order. State must be default
/// constructible. Exceptions from workers are rethrown on the caller.
template <class State, class Work>
std::vector<State> run_chunked(std::size_t count, std::size_t threads, Work&& work) {
    const std::size_t chunks = (count + kScenarioChunk - 1) / kScenarioChunk;
    std::vector<State> states(chunks);
    if (chunks == 0) return states;

    const std::size_t workers = std::min(resolve_threads(threads), chunks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto drain = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            const std::size_t begin = c * kScenarioChunk;
            const std::size_t end = std::min(begin + kScenarioChunk, count);
            try {
                work(states[c], begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return states;
}

}  // namespace fitolab
