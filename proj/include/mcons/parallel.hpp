#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mcons {

/// Thread budget for round-internal parallelism. Controlled by the
/// MCONS_THREADS environment variable; 0 or unset means hardware concurrency.
inline int thread_budget() {
  const char* env = std::getenv("MCONS_THREADS");
  if (env != nullptr) {
    const int v = std::atoi(env);
    if (v > 0) return v;
    if (v < 0) return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n). Iterations must write only to their own slot;
/// results are then independent of the thread count.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int threads = std::min(thread_budget(), n);
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mcons
