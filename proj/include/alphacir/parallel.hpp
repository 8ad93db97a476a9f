#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace alphacir {

inline unsigned default_threads() {
  if (const char* env = std::getenv("ALPHACIR_THREADS")) {
    const long v = std::atol(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs fn(i) for i in [0, n) on the given number of threads. Work items
// are handed out in fixed-size chunks through an atomic cursor; every
// item writes only to its own slot, so results never depend on the
// thread count or on scheduling order.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn,
                  std::size_t chunk = 64) {
  if (n == 0) return;
  if (threads <= 1 || n <= chunk) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    while (true) {
      const std::size_t begin = cursor.fetch_add(chunk);
      if (begin >= n || failed.load(std::memory_order_relaxed)) break;
      const std::size_t end = std::min(n, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        break;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace alphacir
