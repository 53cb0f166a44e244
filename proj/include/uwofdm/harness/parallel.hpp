#pragma once

// Index-ordered parallel map. Results land in slot i regardless of which
// worker ran trial i, so reductions in index order are worker-count invariant.

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace uwofdm::harness {

template <class F>
auto parallel_map(std::size_t n, std::size_t workers, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
    using R = decltype(f(std::size_t{0}));
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = f(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const std::size_t w = std::max<std::size_t>(1, std::min(workers, n));
    if (w == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (std::size_t t = 0; t < w; ++t) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    // lowest failing index wins, independent of scheduling
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace uwofdm::harness
