#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "lanlab/core.hpp"

namespace lanlab {

/// Thread count resolution: explicit request, then LANLAB_THREADS, then
/// hardware concurrency.
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LANLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

/// Work-stealing map over replication indices. Results land in a vector
/// indexed by replication, so any later reduction is order-independent of
/// the thread schedule.
template <class T, class Fn>
std::vector<T> parallel_map_indexed(std::size_t count, int threads, Fn&& fn) {
  std::vector<T> results(count);
  if (count == 0) return results;
  const int nthreads = std::max(1, std::min<int>(threads, int(count)));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return results;
}

}  // namespace lanlab
