#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aqf {

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
///
/// Work items must write only to their own output slot; results are then
/// independent of the worker count. The first exception thrown by any item is
/// rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> nextItem{0};
    std::exception_ptr error;
    std::mutex errorMutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = nextItem.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(errorMutex);
                if (!error) {
                    error = std::current_exception();
                }
                nextItem = count;
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}
