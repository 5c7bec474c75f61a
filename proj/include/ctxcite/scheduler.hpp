#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ctxcite/error.hpp"

namespace ctxcite {

struct SchedulerOptions {
  // Upper bound on concurrently running tasks (provider calls).
  std::size_t maxInFlight = 8;
  // Attempts per task; only ProviderUnavailable is retried.
  int maxAttempts = 3;
  // Called with (completed, total) after each task; never decreases.
  std::function<void(std::size_t, std::size_t)> onProgress;
};

// Runs task(0..count-1) on at most maxInFlight threads and returns the results
// in index order, independent of completion order. On failure the error of
// the lowest failing index is rethrown after all workers stop.
template <class T>
std::vector<T> RunIndexed(std::size_t count, const SchedulerOptions& options,
                          const std::function<T(std::size_t)>& task) {
  std::vector<std::optional<T>> slots(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t completed = 0;
  std::size_t failedIndex = count;
  std::exception_ptr failure;

  auto fail = [&](std::size_t index, std::exception_ptr error) {
    std::lock_guard lock(mu);
    if (index < failedIndex) {
      failedIndex = index;
      failure = std::move(error);
    }
    stop = true;
  };

  auto worker = [&] {
    while (!stop) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      for (int attempt = 1;; ++attempt) {
        try {
          slots[i].emplace(task(i));
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kProviderUnavailable) {
            fail(i, std::current_exception());
            return;
          }
          if (attempt >= options.maxAttempts) {
            fail(i, std::make_exception_ptr(AbortedAfterRetries(i, e.what())));
            return;
          }
        } catch (...) {
          fail(i, std::current_exception());
          return;
        }
      }
      std::lock_guard lock(mu);
      ++completed;
      if (options.onProgress) options.onProgress(completed, count);
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(std::max<std::size_t>(options.maxInFlight, 1), count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<T> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace ctxcite
