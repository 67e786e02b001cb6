#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace idm {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs body(i) for i in [0, count) on a small pool. Indices are handed out
/// in chunks; results must be written to per-index slots. If any body throws,
/// the exception from the lowest failing index is rethrown.
template <typename Body>
void parallel_for(std::int64_t count, int workers, Body&& body, std::int64_t chunk = 16) {
  workers = std::min<std::int64_t>(resolve_workers(workers), std::max<std::int64_t>(1, count / chunk));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  std::int64_t error_index = count;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::int64_t begin = next.fetch_add(chunk);
          if (begin >= count) return;
          const std::int64_t end = std::min(count, begin + chunk);
          for (std::int64_t i = begin; i < end; ++i) {
            try {
              body(i);
            } catch (...) {
              std::lock_guard lock(mu);
              if (i < error_index) {
                error_index = i;
                error = std::current_exception();
              }
            }
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace idm
