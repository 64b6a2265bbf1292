#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace sigcal {

// Worker count: SIGCAL_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs f(begin, end) over [0, n) split into blocks of `block` items.
// Block boundaries do not depend on the thread count.
void parallel_for(std::size_t n, std::size_t block, const std::function<void(std::size_t, std::size_t)>& f);

// Sums per-block partial vectors in block order, so the result is the same
// for every thread count. f(begin, end, acc) adds into acc (length width).
std::vector<double> parallel_sum(std::size_t n, std::size_t block, std::size_t width,
                                 const std::function<void(std::size_t, std::size_t, double*)>& f);

}  // namespace sigcal
