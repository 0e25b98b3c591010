#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace divmkt {

/// Worker cap: DIVMKT_THREADS when set, else hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("DIVMKT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static block partition of [0, n) over the thread budget. The body must
/// write only to its own index's slots; results are then independent of the
/// thread count, which keeps Monte Carlo output deterministic.
inline void parallel_for(long n, const std::function<void(long)>& body) {
  const int workers = std::min<long>(thread_budget(), n);
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const long lo = n * w / workers;
    const long hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace divmkt
