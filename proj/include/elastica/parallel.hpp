#pragma once

#include <cstddef>
#include <functional>

namespace elastica {

/// Worker count: ELASTICA_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Blocks until
/// done; the first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace elastica
