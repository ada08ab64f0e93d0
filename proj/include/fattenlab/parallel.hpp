#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace fattenlab {

namespace detail {
inline std::atomic<int>& thread_count_storage() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

/// Number of worker threads used by data-parallel kernels.
inline int thread_count() { return detail::thread_count_storage().load(); }
inline void set_thread_count(int n) { detail::thread_count_storage().store(std::max(1, n)); }

/// Runs fn(begin, end) over a static partition of [0, n).
///
/// Each index is visited by exactly one worker and the partition depends only
/// on n and the thread count, so kernels that write disjoint outputs produce
/// identical results for any number of threads. Reductions must not be built
/// on top of this; use the fixed-order helpers in kernels.hpp instead.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, std::int64_t min_chunk = 8) {
  const int threads = thread_count();
  if (threads <= 1 || n < 2 * min_chunk) {
    fn(std::int64_t{0}, n);
    return;
  }
  const std::int64_t workers = std::min<std::int64_t>(threads, n / min_chunk);
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (std::int64_t w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::int64_t b = w * chunk;
      const std::int64_t e = std::min(n, b + chunk);
      try {
        if (b < e) fn(b, e);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  try {
    fn(std::int64_t{0}, std::min(n, chunk));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fattenlab
