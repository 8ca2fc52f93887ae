#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace otlab {

/// Static partition of [0, count) into at most `threads` contiguous chunks.
/// fn(begin, end) runs once per chunk; the first exception is rethrown.
template <class F>
void parallel_for(int count, int threads, F&& fn) {
  threads = std::clamp(threads, 1, std::max(count, 1));
  if (threads == 1) {
    if (count > 0) fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk, end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace otlab
