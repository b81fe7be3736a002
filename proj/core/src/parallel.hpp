#pragma once

#include <cstddef>
#include <functional>

namespace relurec::detail {

/// Global worker count. 0 means auto (hardware concurrency, capped at 8).
int worker_threads() noexcept;
void set_worker_threads(int n) noexcept;
int resolved_worker_threads() noexcept;

/// Runs fn(block) for block = 0..n_blocks-1 across the configured workers.
/// Blocks are assigned round-robin by index, and callers keep per-block
/// output slots, so results never depend on the worker count.
void parallel_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& fn);

}  // namespace relurec::detail
