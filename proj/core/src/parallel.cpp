#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace relurec::detail {

namespace {
std::atomic<int> g_workers{0};
}

int worker_threads() noexcept { return g_workers.load(); }

void set_worker_threads(int n) noexcept { g_workers.store(n < 0 ? 0 : n); }

int resolved_worker_threads() noexcept {
  const int configured = g_workers.load();
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

void parallel_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& fn) {
  const int workers =
      static_cast<int>(std::min<std::size_t>(resolved_worker_threads(), n_blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::atomic_flag error_latch = ATOMIC_FLAG_INIT;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t b = static_cast<std::size_t>(t); b < n_blocks;
           b += static_cast<std::size_t>(workers)) {
        try {
          fn(b);
        } catch (...) {
          if (!error_latch.test_and_set()) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace relurec::detail
