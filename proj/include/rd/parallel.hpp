#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace rd {

// Global worker count for element loops and row-block kernels. Default 1.
int num_threads();
void set_num_threads(int n);

// Runs body(begin, end) over a fixed chunk grid of [0, n). The chunk
// boundaries depend only on n, never on the worker count, so any
// chunk-local accumulation combined in chunk order is bit-stable.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

// Deterministic reduction: partial(begin, end) is evaluated per chunk and
// the partial sums are added in ascending chunk order.
double parallel_reduce(
    std::int64_t n,
    const std::function<double(std::int64_t, std::int64_t)>& partial);

}  // namespace rd
