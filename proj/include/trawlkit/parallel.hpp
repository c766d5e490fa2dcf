// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/parallel.hpp
//! Deterministic fan-out over independent repetitions.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace trawlkit
{
//! Worker count: TRAWLKIT_THREADS if set, else the hardware concurrency
inline unsigned thread_count()
{
    if (char const* env = std::getenv("TRAWLKIT_THREADS"))
    {
        int n = std::atoi(env);
        if (n >= 1)
            return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/*!
 * Calls fn(i) for i in [0, n) on up to thread_count() threads.
 *
 * Each index must write only its own output slot, so results do not depend
 * on the schedule. The first exception is rethrown after all workers stop.
 */
template<class F>
void parallel_for(std::size_t n, F&& fn, unsigned threads = 0)
{
    if (threads == 0)
        threads = thread_count();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex m;
    auto work = [&] {
        for (;;)
        {
            std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(m);
                if (!error)
                    error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

}  // namespace trawlkit
