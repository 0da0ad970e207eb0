// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bevpool {

/// 0 means one worker per hardware thread.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, count) into at most `workers` contiguous blocks of at least
/// `grain` items and calls body(begin, end) once per block. Blocks run on
/// separate threads; the caller's thread takes the first one.
template <class Body>
void parallel_for(std::size_t count, std::size_t grain, int workers,
                  Body&& body) {
  if (count == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t max_blocks = (count + grain - 1) / grain;
  const std::size_t blocks =
      std::min<std::size_t>(max_blocks, resolve_workers(workers));
  if (blocks <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  const std::size_t step = (count + blocks - 1) / blocks;
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&](std::size_t b, std::size_t e) {
    try {
      body(b, e);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(blocks - 1);
    for (std::size_t b = step; b < count; b += step) {
      threads.emplace_back(run, b, std::min(count, b + step));
    }
    run(0, std::min(count, step));
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace bevpool
