#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mcbsde {

//! Worker count: MCBSDE_THREADS env var if set, otherwise hardware concurrency.
inline unsigned worker_count()
{
  if (const char* env = std::getenv("MCBSDE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1)
      return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

//! Runs fn(begin, end) over a partition of [0, n). Only valid for bodies that touch
//! disjoint state per index (path-parallel loops); results cannot depend on the split.
inline void parallel_for_blocks(std::size_t n,
                                const std::function<void(std::size_t, std::size_t)>& fn)
{
  const unsigned workers = worker_count();
  if (workers <= 1 || n < 2048) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi)
      break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool)
    t.join();
}

} // namespace mcbsde
