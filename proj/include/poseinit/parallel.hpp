#pragma once

#include <cstddef>
#include <functional>

namespace poseinit {

/// Process-wide cap on worker threads. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n) using up to thread_count() workers with static
/// contiguous chunking. body must only write state owned by index i, which
/// makes the result independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace poseinit
