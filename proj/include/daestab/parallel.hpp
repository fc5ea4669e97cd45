#pragma once

#include <thread>
#include <vector>

namespace daestab::detail {

// Strided index-parallel loop. The body must confine itself to slot i of
// pre-sized result storage; combined with counter-based sampling this keeps
// results independent of the schedule.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    if (count <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace daestab::detail
