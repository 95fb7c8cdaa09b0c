#pragma once

#include <cstddef>
#include <functional>

namespace mtmrc {

// Worker count: MTMRC_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t thread_limit();

// Runs body(i) for i in [0, n) on up to thread_limit() threads. Work is
// split into contiguous chunks; each index is handled by exactly one call,
// so any per-index result is independent of the thread count. The first
// exception thrown by a body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mtmrc
