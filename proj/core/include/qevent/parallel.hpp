#pragma once

#include <cstdint>
#include <functional>

namespace qevent {

// Thread count resolution: explicit request > QEVENT_THREADS env var >
// hardware concurrency. Always at least 1.
int resolve_thread_count(int requested);

// Runs fn(i) for i in [0, n) across the given number of threads (0 = auto).
// Work is block-partitioned; fn must only write to slots owned by its index.
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace qevent
