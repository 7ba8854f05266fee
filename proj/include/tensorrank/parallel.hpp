#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tensorrank {

// Worker cap shared by all parallel loops. 0 means hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

namespace detail {
// Set on pool workers and on the caller while a parallel loop runs, so
// nested loops execute inline instead of oversubscribing.
inline thread_local bool in_parallel_region = false;
}  // namespace detail

// Runs body(i) for i in [0, n). Iterations are claimed dynamically, so
// bodies must write only to slots owned by i. The first exception thrown
// by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(max_threads(), n));
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
    detail::in_parallel_region = outer;
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace tensorrank
