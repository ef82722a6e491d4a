#pragma once

#include <cstddef>
#include <functional>

namespace tempcov {

// Number of worker threads to use: TEMPCOV_THREADS if set (clamped to >= 1),
// otherwise std::thread::hardware_concurrency().
int thread_budget();

// Runs body(i) for i in [0, n).  `threads <= 0` means use thread_budget().
// Iterations are claimed from a shared counter, so per-iteration state must
// not assume any ordering; outputs indexed by i keep results deterministic.
// The first exception thrown by any iteration is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int threads = 0);

}  // namespace tempcov
