#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ellab::util {

/// Worker count: ELL_LAB_THREADS when set (clamped to >= 1), else hardware.
inline int thread_count() {
  if (const char* env = std::getenv("ELL_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, n) on up to thread_count() workers. Each index is
/// processed exactly once; callers own any output slots, so results do not
/// depend on the worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ellab::util
