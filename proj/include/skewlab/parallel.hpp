#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace skewlab {

// Data-parallel loop over [0,n). Each index must be independent and write only
// to its own output slot; under that contract the result is identical for any
// thread count, including 1. Reductions are done by the caller afterwards in
// index order.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (threads < 1) threads = 1;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw > 0 && static_cast<unsigned>(threads) > hw * 4) threads = static_cast<int>(hw * 4);
    if (threads == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t chunk = n / (static_cast<std::size_t>(threads) * 8);
    if (chunk == 0) chunk = 1;
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t begin = cursor.fetch_add(chunk);
            if (begin >= n) return;
            std::size_t end = begin + chunk < n ? begin + chunk : n;
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace skewlab
