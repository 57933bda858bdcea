#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace dynfield {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

// Splits [0,n) into `workers` contiguous chunks. Chunk boundaries depend only
// on (workers, n), so any per-chunk accumulation reduced in worker order is
// reproducible for a fixed worker count.
inline void parallel_chunks(int workers, int n,
                            const std::function<void(int worker, int begin, int end)>& fn) {
  workers = resolve_workers(workers);
  if (workers == 1 || n <= 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    int begin = int(int64_t(n) * w / workers);
    int end = int(int64_t(n) * (w + 1) / workers);
    pool.emplace_back(fn, w, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace dynfield
