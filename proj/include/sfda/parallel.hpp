#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sfda {

/// Worker count for a requested value; values < 1 mean "all cores".
inline int resolve_threads(int requested) {
  if (requested >= 1) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; callers write results by index so the outcome does
/// not depend on scheduling. If any call throws, the exception of the
/// lowest failing index is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(
      static_cast<std::size_t>(resolve_threads(threads)), std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sfda
