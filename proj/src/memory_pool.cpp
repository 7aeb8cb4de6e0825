#include "hyperpart/memory_pool.hpp"

#include <cstring>

#include "hyperpart/assertions.hpp"
#include "hyperpart/parallel.hpp"

namespace hyperpart {

namespace {
constexpr size_t kAlignment = 64;

size_t roundUp(size_t bytes) {
  return (bytes + kAlignment - 1) / kAlignment * kAlignment;
}
}  // namespace

void MemoryPool::reserve(size_t bytes) {
  HP_ASSERT(_offset.load() == 0, "reserve with outstanding borrows");
  if (bytes > _block.size()) {
    _block.assign(roundUp(bytes), std::byte{0});
  }
}

void* MemoryPool::borrowBytes(size_t bytes, bool zeroed) {
  bytes = roundUp(bytes);
  _phase_usage.fetch_add(bytes, std::memory_order_relaxed);

  const size_t offset = _offset.fetch_add(bytes, std::memory_order_relaxed);
  if (offset + bytes <= _block.size()) {
    std::byte* p = _block.data() + offset;
    if (zeroed) {
      // Large arrays dominate phase setup; clear them with parallel chunks.
      if (bytes >= (1u << 20)) {
        parallelFor(0, (bytes + (1u << 18) - 1) >> 18, [&](size_t chunk) {
          const size_t begin = chunk << 18;
          std::memset(p + begin, 0, std::min(bytes - begin, size_t{1} << 18));
        });
      } else {
        std::memset(p, 0, bytes);
      }
    }
    return p;
  }
  _offset.fetch_sub(bytes, std::memory_order_relaxed);

  // Does not fit (or pooling disabled): direct allocation. Counted as a
  // warning only when an arena was actually reserved.
  if (enabled()) {
    _fallback_count.fetch_add(1, std::memory_order_relaxed);
  }
  auto chunk = std::make_unique<std::byte[]>(bytes);
  std::memset(chunk.get(), 0, bytes);
  std::byte* p = chunk.get();
  {
    std::lock_guard<std::mutex> lock(_fallback_mutex);
    _fallback_chunks.push_back(std::move(chunk));
  }
  return p;
}

void MemoryPool::resetPhase() {
  size_t usage = _phase_usage.exchange(0, std::memory_order_relaxed);
  size_t high = _high_water.load(std::memory_order_relaxed);
  while (usage > high &&
         !_high_water.compare_exchange_weak(high, usage, std::memory_order_relaxed)) {
  }
  _offset.store(0, std::memory_order_relaxed);
  std::lock_guard<std::mutex> lock(_fallback_mutex);
  _fallback_chunks.clear();
}

}  // namespace hyperpart
