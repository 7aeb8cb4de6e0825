#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

// Parallel shuffle whose result depends only on seed and worker count, not
// on scheduling: the data splits into 2p blocks (the first n mod 2p blocks
// one element larger), a seeded permutation pairs the blocks, and worker w
// interleaves its pair elementwise before shuffling each block on its own
// derived stream. Workers touch disjoint blocks, so no synchronization is
// needed.
template <typename T>
void blockShuffle(std::span<T> data, uint64_t seed, int num_workers) {
  const size_t n = data.size();
  if (n <= 1) {
    return;
  }
  const size_t p = static_cast<size_t>(std::max(1, num_workers));
  const size_t num_blocks = 2 * p;
  const size_t small = n / num_blocks;
  const size_t num_large = n % num_blocks;
  auto blockStart = [&](size_t b) { return b * small + std::min(b, num_large); };
  auto blockSize = [&](size_t b) { return small + (b < num_large ? 1 : 0); };

  std::vector<uint32_t> sigma(num_blocks);
  std::iota(sigma.begin(), sigma.end(), 0u);
  Rng sigma_rng = derivedRng(seed, num_blocks, 0);
  sigma_rng.shuffle(sigma);

  parallelFor(size_t{0}, p, [&](size_t w) {
    const size_t a = sigma[2 * w];
    const size_t b = sigma[2 * w + 1];
    T* block_a = data.data() + blockStart(a);
    T* block_b = data.data() + blockStart(b);
    const size_t size_a = blockSize(a);
    const size_t size_b = blockSize(b);
    for (size_t i = 0; i < std::min(size_a, size_b); ++i) {
      std::swap(block_a[i], block_b[i]);
    }
    Rng rng_a = derivedRng(seed, w, 1);
    rng_a.shuffle(block_a, size_a);
    Rng rng_b = derivedRng(seed, w, 2);
    rng_b.shuffle(block_b, size_b);
  }, 1);
}

}  // namespace hyperpart
