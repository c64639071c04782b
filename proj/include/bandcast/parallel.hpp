#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bandcast {

// Runs fn(i) for i in [0, n) across up to `jobs` threads. Work items must
// write only to their own per-index slots so results are identical for any
// job count. Indices are striped statically; no work stealing, no locks on
// the hot path. The first exception thrown by a worker is rethrown.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
    if (jobs < 1) jobs = 1;
    size_t nthreads = std::min<size_t>(size_t(jobs), n);
    if (nthreads <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (size_t i = t; i < n; i += nthreads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace bandcast
