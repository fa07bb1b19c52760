#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "branchsim/rng.hpp"

namespace branchsim {

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs `body(rng, acc, replica)` for replica = 0..reps-1 with disjoint RNG
/// substreams, fanned out over `workers` threads.
///
/// Replicas are grouped into fixed-size blocks and block results are merged
/// in block order, so the result is identical for any worker count.
template <class Summary, class Body>
Summary parallel_mc(std::uint64_t reps, std::uint64_t seed, unsigned workers,
                    Body&& body) {
  if (reps == 0) return Summary{};
  const std::uint64_t n_blocks = reps < 256 ? reps : 256;
  const std::uint64_t block_size = (reps + n_blocks - 1) / n_blocks;
  std::vector<Summary> block_results(n_blocks);

  std::atomic<std::uint64_t> next_block{0};
  auto work = [&] {
    for (;;) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      Summary acc{};
      const std::uint64_t lo = b * block_size;
      const std::uint64_t hi = std::min(reps, lo + block_size);
      for (std::uint64_t r = lo; r < hi; ++r) {
        Rng rng = Rng::substream(seed, r);
        body(rng, acc, r);
      }
      block_results[b] = acc;
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  Summary total{};
  for (const auto& blk : block_results) total = merge(total, blk);
  return total;
}

}  // namespace branchsim
