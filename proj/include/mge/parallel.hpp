#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mge {

// Runs fn(worker, begin, end) over contiguous chunks of [0, n) on `workers`
// threads. Chunk boundaries depend only on (n, workers), so per-worker
// accumulators merged in worker order give deterministic results for a fixed
// worker count.
inline void parallel_chunks(std::size_t n, int workers,
                            const std::function<void(int, std::size_t, std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    fn(0, 0, n);
    return;
  }
  const auto w = static_cast<std::size_t>(workers);
  const std::size_t chunk = (n + w - 1) / w;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t begin = k * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, static_cast<int>(k), begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace mge
