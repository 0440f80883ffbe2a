#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace spectral {

// Runs fn(i) for i in [0, count) on up to `threads` workers in contiguous
// chunks. Callers store results by index, so output is independent of
// scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  unsigned nt = threads > count ? static_cast<unsigned>(count) : threads;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::size_t chunk = (count + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = lo + chunk < count ? lo + chunk : count;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline unsigned default_thread_count() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace spectral
