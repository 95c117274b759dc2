// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace tprt {

/// Caps the worker count used by parallel_for. 0 restores the hardware default.
void set_thread_count(int threads);
[[nodiscard]] int thread_count();

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each,
/// possibly concurrently. Chunks never overlap; results must not depend on
/// the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace tprt
