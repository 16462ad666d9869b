// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace irscale {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index
/// runs exactly once. Exceptions are collected per index; the one from the
/// lowest failing index is rethrown after all workers have joined.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace irscale
