#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace segcal {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for every i in [0, count) on up to `threads` workers using a
// static block partition. If several indices throw, the exception from the
// lowest index is rethrown, so error reporting does not depend on timing.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::min(resolve_threads(threads), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> failed_at(threads, count);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        const std::size_t begin = count * w / threads;
        const std::size_t end = count * (w + 1) / threads;
        for (std::size_t i = begin; i < end; ++i) {
          try {
            fn(i);
          } catch (...) {
            errors[w] = std::current_exception();
            failed_at[w] = i;
            return;
          }
        }
      });
    }
  }
  std::size_t first = threads;
  for (std::size_t w = 0; w < threads; ++w) {
    if (errors[w] && (first == threads || failed_at[w] < failed_at[first])) first = w;
  }
  if (first != threads) std::rethrow_exception(errors[first]);
}

// Sorts with a strict total order on `threads` workers: chunks are sorted
// independently and merged pairwise. With a total order the result is the
// unique sorted sequence, identical for any worker count.
template <class T, class Less>
void parallel_sort(std::vector<T>& values, Less less, std::size_t threads) {
  const std::size_t n = values.size();
  threads = std::max<std::size_t>(1, std::min(resolve_threads(threads), n / 4096 + 1));
  if (threads == 1) {
    std::sort(values.begin(), values.end(), less);
    return;
  }
  std::vector<std::size_t> bounds(threads + 1);
  for (std::size_t w = 0; w <= threads; ++w) bounds[w] = n * w / threads;
  parallel_for(threads, threads, [&](std::size_t w) {
    std::sort(values.begin() + static_cast<std::ptrdiff_t>(bounds[w]),
              values.begin() + static_cast<std::ptrdiff_t>(bounds[w + 1]), less);
  });
  std::vector<T> scratch(n);
  while (bounds.size() > 2) {
    const std::size_t runs = bounds.size() - 1;
    std::vector<std::size_t> next;
    next.reserve(runs / 2 + 2);
    for (std::size_t r = 0; r < runs; r += 2) next.push_back(bounds[r]);
    next.push_back(n);
    parallel_for((runs + 1) / 2, threads, [&](std::size_t pair) {
      const std::size_t lo = bounds[2 * pair];
      const std::size_t mid = bounds[std::min(2 * pair + 1, runs)];
      const std::size_t hi = bounds[std::min(2 * pair + 2, runs)];
      std::merge(values.begin() + static_cast<std::ptrdiff_t>(lo),
                 values.begin() + static_cast<std::ptrdiff_t>(mid),
                 values.begin() + static_cast<std::ptrdiff_t>(mid),
                 values.begin() + static_cast<std::ptrdiff_t>(hi),
                 scratch.begin() + static_cast<std::ptrdiff_t>(lo), less);
    });
    values.swap(scratch);
    bounds = std::move(next);
  }
}

}  // namespace segcal
