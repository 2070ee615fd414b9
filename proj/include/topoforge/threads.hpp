#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace topoforge {

/// Worker count: hardware concurrency, capped by the TOPOFORGE_THREADS
/// environment variable when set.
inline unsigned worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("TOPOFORGE_THREADS")) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
    }
    return n;
}

/// Run fn(i, worker) for i in [0, n) across workers. `worker` identifies the
/// executing thread (0 = caller) so callers can keep per-worker scratch.
/// Results must be written to per-index slots; the schedule is by atomic
/// counter, so output content stays deterministic regardless of thread count.
/// The first exception thrown by any worker is rethrown on the caller.
inline void parallel_for_indexed(std::size_t n,
                                 const std::function<void(std::size_t, unsigned)>& fn) {
    unsigned workers = worker_count();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, 0);
        return;
    }
    if (workers > n) workers = static_cast<unsigned>(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&](unsigned id) {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i, id);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);  // stop handing out work
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker, t);
    worker(0);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_for_indexed(n, [&](std::size_t i, unsigned) { fn(i); });
}

}  // namespace topoforge
