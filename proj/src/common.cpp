#include "wavekin/common.hpp"

#include <algorithm>
#include <atomic>

namespace wavekin {

namespace {
std::atomic<int> g_threads{0};
}

int worker_threads() {
  int n = g_threads.load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_worker_threads(int n) { g_threads.store(std::max(0, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_body) {
  if (n == 0) return;
  std::size_t nt = static_cast<std::size_t>(worker_threads());
  nt = std::min(nt, n);
  if (nt <= 1) {
    chunk_body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] { chunk_body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace wavekin
