// Index-parallel loop over independent work items. Each index derives its
// own RNG stream upstream, so results are identical for any worker count;
// callers still aggregate in index order.
#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace miracl {

inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  const int thread_count = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace miracl
