#pragma once

#include <cstddef>
#include <functional>

namespace usstyle {

// Worker count: hardware concurrency, capped by the USSTYLE_THREADS
// environment variable when it is set to a positive integer.
std::size_t worker_count();

// Runs fn(i) for every i in [0, n). Work is distributed over worker_count()
// threads; callers write results into pre-sized slots so output order never
// depends on scheduling. The first exception thrown by fn is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace usstyle
