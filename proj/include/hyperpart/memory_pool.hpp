#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "hyperpart/types.hpp"

namespace hyperpart {

// Scratch arena handed from phase to phase. One block is reserved up front
// from a closed-form estimate; phases bump-allocate zero-initialized arrays
// out of it and return everything at the phase boundary. A borrow that does
// not fit falls back to a direct heap allocation and bumps a warning counter
// instead of failing.
class MemoryPool {
 public:
  MemoryPool() = default;

  // Reserves the arena. Safe to call again with a larger size while no
  // borrows are outstanding.
  void reserve(size_t bytes);

  bool enabled() const { return !_block.empty(); }
  size_t reservedBytes() const { return _block.size(); }
  size_t highWater() const { return _high_water.load(std::memory_order_relaxed); }
  size_t fallbackCount() const { return _fallback_count.load(std::memory_order_relaxed); }

  // Zero-initialized array of `count` Ts, 64-byte aligned. Thread-safe.
  template <typename T>
  std::span<T> borrowArray(size_t count) {
    static_assert(std::is_trivially_copyable_v<T>);
    void* p = borrowBytes(count * sizeof(T), /*zeroed=*/true);
    return {static_cast<T*>(p), count};
  }

  // Returns every outstanding borrow; previously handed-out spans die here.
  void resetPhase();

 private:
  void* borrowBytes(size_t bytes, bool zeroed);

  std::vector<std::byte> _block;
  std::atomic<size_t> _offset{0};
  std::atomic<size_t> _phase_usage{0};
  std::atomic<size_t> _high_water{0};
  std::atomic<size_t> _fallback_count{0};
  std::mutex _fallback_mutex;
  std::vector<std::unique_ptr<std::byte[]>> _fallback_chunks;
};

}  // namespace hyperpart
