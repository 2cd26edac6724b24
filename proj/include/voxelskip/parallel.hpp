#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace voxelskip {

inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

/// Runs body(begin, end) over contiguous chunks of [0, count) on worker threads.
/// Chunks never overlap, so bodies writing to disjoint output ranges need no
/// synchronization.
template <typename Body>
void parallel_for_chunks(std::int64_t count, Body&& body, std::int64_t min_chunk = 1) {
  if (count <= 0) return;
  const std::int64_t workers =
      std::min<std::int64_t>(worker_count(), std::max<std::int64_t>(1, count / std::max<std::int64_t>(1, min_chunk)));
  if (workers <= 1) {
    body(std::int64_t{0}, count);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(static_cast<std::size_t>(workers - 1));
  const std::int64_t step = (count + workers - 1) / workers;
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t b = w * step;
    const std::int64_t e = std::min(count, b + step);
    if (b >= e) break;
    threads.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::int64_t{0}, std::min(count, step));
}

}  // namespace voxelskip
