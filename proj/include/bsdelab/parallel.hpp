#pragma once

#include <thread>
#include <vector>

namespace bsdelab {

/// Runs fn(begin, end) over [0, count) in contiguous chunks. Results must be
/// written to disjoint slots so the outcome is schedule-independent.
template <typename Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 4096) {
    fn(0L, count);
    return;
  }
  const int workers = std::min<long>(threads, std::max<long>(1, count / 1024));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const long chunk = (count + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const long lo = t * chunk;
    const long hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace bsdelab
