#pragma once

#include <cstddef>
#include <functional>

namespace rigidity {

/// Worker count: RIGIDITY_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index
/// runs exactly once; callers write into per-index slots and reduce in index
/// order, so results do not depend on the worker count. The first exception
/// thrown by any body is rethrown after all workers join. Nested calls from
/// inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rigidity
