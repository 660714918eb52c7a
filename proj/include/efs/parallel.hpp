#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace efs {

// Worker count: EFSLAB_THREADS caps hardware_concurrency when set.
inline int worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("EFSLAB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v < static_cast<long>(hw)) return static_cast<int>(v);
        if (v >= 1) return static_cast<int>(v);
    }
    return static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Work items must write to disjoint state;
// results are deterministic regardless of the schedule.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    int threads = std::min(worker_count(), n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace efs
