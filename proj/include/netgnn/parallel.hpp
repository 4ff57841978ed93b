#pragma once

#include <cstddef>
#include <functional>

namespace netgnn {

// Worker count: NETGNN_THREADS if set (>=1), else hardware concurrency.
std::size_t thread_budget();

// Runs body(i) for i in [0, n) on up to thread_budget() threads. Callers
// write results into pre-sized slots indexed by i so output order never
// depends on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace netgnn
