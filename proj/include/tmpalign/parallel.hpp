#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace tmpalign {

namespace detail {
inline std::atomic<int>& worker_count_slot() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

inline int worker_count() { return detail::worker_count_slot().load(); }

inline void set_worker_count(int n) {
  detail::worker_count_slot().store(std::max(1, n));
}

/// Runs fn(y_begin, y_end) over a static partition of [0, height) rows.
/// Partitioning depends only on (height, worker_count); as long as fn writes
/// disjoint rows, results are identical for every worker count.
template <typename Fn>
void parallel_for_rows(int height, Fn&& fn) {
  const int workers = std::min(worker_count(), std::max(1, height));
  if (workers <= 1 || height <= 1) {
    fn(0, height);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const int base = height / workers;
  const int extra = height % workers;
  int y = 0;
  for (int w = 0; w < workers; ++w) {
    const int rows = base + (w < extra ? 1 : 0);
    const int y0 = y;
    const int y1 = y + rows;
    y = y1;
    pool.emplace_back([&, y0, y1] {
      try {
        fn(y0, y1);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tmpalign
