// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace irscale {

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(count);
    const auto run_one = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) run_one(i);
            });
        }
    }

    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace irscale
