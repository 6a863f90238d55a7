#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace ldp {

/// Evaluates fn(r) for r in [0, count) on up to `workers` threads and returns
/// the values in replica order. Each replica must own its random stream, so the
/// output is independent of the worker count.
template <typename T, typename Fn>
std::vector<T> run_replicas(std::uint64_t count, int workers, Fn&& fn) {
  std::vector<T> out(count);
  const auto threads = static_cast<std::uint64_t>(
      std::clamp<std::int64_t>(workers, 1, std::max<std::int64_t>(1, static_cast<std::int64_t>(count))));
  if (threads <= 1) {
    for (std::uint64_t r = 0; r < count; ++r) out[r] = fn(r);
    return out;
  }

  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::uint64_t chunk = (count + threads - 1) / threads;
  for (std::uint64_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::uint64_t end = std::min(count, (w + 1) * chunk);
        for (std::uint64_t r = w * chunk; r < end; ++r) out[r] = fn(r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ldp
