#pragma once

#include <cstddef>
#include <functional>

namespace lig {

/// Worker count: LIG_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs body(index, worker) for every index in [0, count). Indices are handed
/// out dynamically; worker is in [0, workers) and identifies the calling
/// thread for per-worker scratch buffers.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, int)>& body);

}  // namespace lig
