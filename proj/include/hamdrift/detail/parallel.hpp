// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace hamdrift::detail {

inline int resolve_threads(int requested, std::int64_t work_items) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    n = std::max(n, 1);
    return static_cast<int>(std::min<std::int64_t>(n, std::max<std::int64_t>(work_items, 1)));
}

/**
 * Calls fn(i) for i in [0, count). Worker w takes i = w, w + T, ... in
 * increasing order, so results written by index are independent of the
 * thread count. If any call throws, the exception of the smallest failing
 * index is rethrown after all workers finish.
 */
template <class Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
    const int workers = resolve_threads(threads, count);
    if (workers == 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::int64_t> failed_at(workers, std::numeric_limits<std::int64_t>::max());
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::int64_t i = w; i < count; i += workers) {
                    try {
                        fn(i);
                    } catch (...) {
                        failed_at[w] = i;
                        errors[w] = std::current_exception();
                        return;
                    }
                }
            });
        }
    }
    const auto first = std::min_element(failed_at.begin(), failed_at.end());
    if (*first != std::numeric_limits<std::int64_t>::max()) {
        std::rethrow_exception(errors[first - failed_at.begin()]);
    }
}

}  // namespace hamdrift::detail
