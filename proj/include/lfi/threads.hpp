#pragma once

#include <functional>

namespace lfi::nd {

// Worker count: LFVI_THREADS if set and positive, else hardware concurrency,
// floored at 1. Read once per process.
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker. fn must only write to per-index slots; results are then identical
// for any thread count. Runs inline when n is small or one worker is active.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace lfi::nd
