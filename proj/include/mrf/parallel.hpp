#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mrf {

// Run fn over [0, n) split into one contiguous block per worker. Static
// partitioning keeps every output slot owned by exactly one thread, so
// results cannot depend on scheduling. The first exception wins and is
// rethrown on the caller.
inline void parallel_blocks(std::size_t n, int workers,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
    if (workers < 1) workers = 1;
    auto w = static_cast<std::size_t>(workers);
    if (w > n) w = n ? n : 1;
    if (w == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    std::size_t base = n / w, extra = n % w, begin = 0;
    for (std::size_t t = 0; t < w; ++t) {
        std::size_t len = base + (t < extra ? 1 : 0);
        std::size_t end = begin + len;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace mrf
