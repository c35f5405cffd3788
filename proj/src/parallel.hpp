#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace spectral_homotopy::detail {

/// Worker count: SPECTRAL_HOMOTOPY_THREADS if set (>= 1), else the hardware
/// concurrency.
inline unsigned worker_count() {
  static const unsigned count = [] {
    if (const char* env = std::getenv("SPECTRAL_HOMOTOPY_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
  }();
  return count;
}

/// Evaluates fn(i) for i in [0, count) and returns the results in index
/// order. Each result depends only on its index, so reductions performed by
/// the caller over the returned vector are independent of scheduling.
template <class T, class Fn>
std::vector<T> map_indexed(std::size_t count, Fn&& fn) {
  std::vector<T> results(count);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace spectral_homotopy::detail
