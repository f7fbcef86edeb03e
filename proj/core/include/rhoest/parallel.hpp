#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace rhoest {

/// Runs fn(begin, end) over contiguous chunks of [0, total) on up to
/// `threads` workers. Chunk boundaries depend only on (total, threads),
/// so any per-chunk state can be merged deterministically.
inline void parallel_chunks(std::size_t total, int threads,
                            const std::function<void(std::size_t, std::size_t,
                                                     int)>& fn) {
  threads = std::max(1, threads);
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(total, 1));
  if (workers <= 1 || total == 0) {
    fn(0, total, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (total + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end, static_cast<int>(w));
  }
  for (auto& t : pool) t.join();
}

}  // namespace rhoest
