#include "rd/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

namespace rd {

namespace {
int g_threads = 1;

std::int64_t chunk_count(std::int64_t n) {
  // Fixed grid: independent of the worker count.
  return std::min<std::int64_t>(n, 128);
}

void for_each_chunk(
    std::int64_t n,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  const std::int64_t chunks = chunk_count(n);
  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t b = c * n / chunks;
    const std::int64_t e = (c + 1) * n / chunks;
    body(c, b, e);
  };
  const int workers = static_cast<int>(std::min<std::int64_t>(g_threads, chunks));
  if (workers <= 1) {
    for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::int64_t> next(0);
  auto work = [&]() {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      run_chunk(c);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 0; t < workers - 1; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}
}  // namespace

int num_threads() { return g_threads; }

void set_num_threads(int n) {
  if (n < 1) throw std::invalid_argument("thread count must be >= 1");
  g_threads = n;
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  for_each_chunk(n, [&](std::int64_t, std::int64_t b, std::int64_t e) { body(b, e); });
}

double parallel_reduce(
    std::int64_t n,
    const std::function<double(std::int64_t, std::int64_t)>& partial) {
  if (n <= 0) return 0.0;
  std::vector<double> parts(chunk_count(n), 0.0);
  for_each_chunk(n, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    parts[c] = partial(b, e);
  });
  double sum = 0.0;
  for (double v : parts) sum += v;
  return sum;
}

}  // namespace rd
