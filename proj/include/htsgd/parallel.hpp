#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace htsgd {

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 picks the
/// hardware concurrency) and returns the results in index order. Each
/// worker writes only its own slots; results are read after all joins.
template <class Result, class Fn>
std::vector<Result> run_replicates(std::size_t count, std::size_t threads, Fn fn) {
  std::vector<Result> out(count);
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = fn(i);
    }
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) {
          out[i] = fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return out;
}

}  // namespace htsgd
