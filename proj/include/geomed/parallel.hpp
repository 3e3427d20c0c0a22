#ifndef GEOMED_PARALLEL_HPP
#define GEOMED_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace geomed {

// Worker count: GEOMED_THREADS if set to a positive integer, else hardware
// concurrency (at least 1).
std::size_t thread_count();

// Runs body(i) for i in [0, count). Work is split into contiguous blocks,
// one per worker. Calls made from inside a worker run inline, so nesting
// never oversubscribes. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace geomed

#endif  // GEOMED_PARALLEL_HPP
