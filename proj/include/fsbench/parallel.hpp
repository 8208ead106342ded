#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fsbench {

/// Worker count from FSBENCH_WORKERS when set to a positive integer,
/// otherwise `fallback`.
inline std::size_t workers_from_env(std::size_t fallback) {
  if (const char* v = std::getenv("FSBENCH_WORKERS")) {
    try {
      const long w = std::stol(v);
      if (w > 0) return static_cast<std::size_t>(w);
    } catch (...) {
    }
  }
  return fallback;
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Units are
/// claimed dynamically, so fn must write its result into a slot owned by i.
/// The first exception thrown by any unit is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace fsbench
