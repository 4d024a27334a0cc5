#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

// Deterministic fork-join helper for embarrassingly parallel sweeps.  Tasks
// write results into preallocated slots keyed by index, so the output of a
// parallel run is identical to a serial one.

namespace shapespline {

// Worker count: SHAPESPLINE_THREADS when set to a positive integer,
// otherwise the hardware concurrency (at least 1).
inline int thread_budget() {
    if (const char* env = std::getenv("SHAPESPLINE_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && parsed > 0) return static_cast<int>(std::min(parsed, 256L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, count).  Work is split into contiguous chunks,
// one per worker; the first exception in worker order is rethrown after all
// workers join.  body must only touch state owned by its own index.
inline void parallel_for(int count, const std::function<void(int)>& body) {
    if (count <= 0) return;
    const int workers = std::min(thread_budget(), count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const int lo = w * chunk;
            const int hi = std::min(count, lo + chunk);
            try {
                for (int i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace shapespline
