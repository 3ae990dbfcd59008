// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace planerf {

// Splits [0, n) into `threads` contiguous chunks and runs
// fn(begin, end, chunk_index) on each. Chunk boundaries depend only on
// (n, threads), so any reduction that combines per-chunk results in
// chunk order is deterministic for a fixed thread count.
// threads <= 1 runs inline on the calling thread.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  if (threads <= 1) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::size_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t c = 0; c < nt; ++c) {
    std::size_t b = c * chunk;
    std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e, c] { fn(b, e, static_cast<int>(c)); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace planerf
