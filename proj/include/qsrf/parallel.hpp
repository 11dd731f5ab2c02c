#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

#include "qsrf/types.hpp"

namespace qsrf {

inline int default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
/// not depend on the thread count, so any reduction keyed by chunk index is
/// reproducible no matter how many workers run.
inline void parallel_chunks(Index n, Index chunk, int threads,
                            const std::function<void(Index, Index)>& fn) {
  if (n <= 0) return;
  const Index n_chunks = (n + chunk - 1) / chunk;
  if (threads <= 1 || n_chunks == 1) {
    for (Index c = 0; c < n_chunks; ++c)
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (;;) {
      const Index c = next.fetch_add(1);
      if (c >= n_chunks) return;
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = static_cast<int>(
      std::min<Index>(n_chunks, static_cast<Index>(threads)));
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace qsrf
