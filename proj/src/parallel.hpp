#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qsr {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Work is chunked across threads; callers that
// need determinism store results into index i and combine in index order
// afterwards, so the outcome is bit-stable for any thread count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nthreads = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nthreads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Ordered reduction: row_fn(i) produces one partial value per row; partials
// are summed in row order regardless of which thread computed them.
inline double parallel_row_sum(std::size_t rows, int threads,
                               const std::function<double(std::size_t)>& row_fn) {
    std::vector<double> partial(rows, 0.0);
    parallel_for(rows, threads, [&](std::size_t i) { partial[i] = row_fn(i); });
    double acc = 0.0;
    for (double v : partial) acc += v;
    return acc;
}

}  // namespace qsr
