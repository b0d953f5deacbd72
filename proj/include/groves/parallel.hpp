#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace groves {

// Runs fn(i) for every i in [0, count). Work is split into one contiguous
// chunk per worker; with threads <= 1 everything runs inline on the caller.
// The caller is responsible for making fn(i) independent of execution order
// (write to slot i, derive randomness from i).
template <typename Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
  if (count <= 0) return;
  const std::int64_t workers =
      std::min<std::int64_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::int64_t chunk = (count + workers - 1) / workers;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::int64_t begin = w * chunk;
      const std::int64_t end = std::min(count, begin + chunk);
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace groves
