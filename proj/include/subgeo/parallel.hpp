#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace subgeo {

/// Worker count from an explicit request, else SUBGEO_THREADS, else 1.
int resolve_threads(int requested);

/// Process-wide default used by library routines that fan out work.
void set_default_threads(int n);
int default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
/// its own result slot, so callers that fold results in index order get the
/// same answer for every worker count.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  parallel_for(n, default_threads(), std::forward<Body>(body));
}

}  // namespace subgeo
