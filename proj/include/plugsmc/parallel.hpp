#ifndef PLUGSMC_PARALLEL_HPP
#define PLUGSMC_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace plugsmc {

/// 0 means "one worker per hardware thread".
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, n) on up to `workers` threads using contiguous
/// chunks. The first exception thrown by any call is rethrown on the caller.
/// Results never depend on the worker count as long as body(i) only touches
/// slot i and draws from an rng derived from i.
template <typename Body>
void parallel_for(int n, int workers, Body&& body) {
  const int w = std::min(resolve_workers(workers), std::max(n, 1));
  if (w <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int worker = 0; worker < w; ++worker) {
    const int begin = static_cast<int>(static_cast<long>(n) * worker / w);
    const int end = static_cast<int>(static_cast<long>(n) * (worker + 1) / w);
    pool.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace plugsmc

#endif  // PLUGSMC_PARALLEL_HPP
