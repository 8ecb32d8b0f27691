#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pklab/config.hpp"

namespace pklab {

// Deterministic work-sharing loop.  The index range is split into fixed-size
// chunks whose boundaries depend only on (n, chunk); threads grab chunks off
// a shared counter.  body(i) must write to disjoint state per index (or the
// caller reduces per-chunk buffers afterwards, in chunk order), so the result
// is byte-identical for any thread count, including 1.
template <class Body>
void parallel_for(std::size_t n, const Body& body, std::size_t chunk = 64) {
    if (n == 0) return;
    int nt = effective_threads();
    if (nt <= 1 || n <= chunk) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            std::size_t end = begin + chunk < n ? begin + chunk : n;
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt) - 1);
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace pklab
