#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hyperpart/assertions.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Addressable 4-ary max-heap over vertex ids keyed by gain. Equal keys pop
// most-recently-touched first, which keeps localized searches expanding
// around their latest moves. The position index is sized once per vertex
// count and reused across searches; clear() only walks live entries.
class AddressablePQ {
 public:
  void resize(size_t num_vertices) {
    if (_pos.size() < num_vertices) {
      _pos.assign(num_vertices, kAbsent);
    }
  }

  bool empty() const { return _heap.empty(); }
  size_t size() const { return _heap.size(); }

  bool contains(VertexID v) const { return _pos[v] != kAbsent; }
  Gain keyOf(VertexID v) const { return _heap[_pos[v]].key; }

  void insert(VertexID v, Gain key) {
    HP_ASSERT(!contains(v));
    _heap.push_back({key, ++_recency, v});
    _pos[v] = static_cast<int32_t>(_heap.size() - 1);
    siftUp(_heap.size() - 1);
  }

  // Insert or update; refreshed entries count as touched for the tie-break.
  void insertOrAdjust(VertexID v, Gain key) {
    if (!contains(v)) {
      insert(v, key);
      return;
    }
    const size_t i = _pos[v];
    _heap[i].key = key;
    _heap[i].recency = ++_recency;
    if (!siftUp(i)) {
      siftDown(i);
    }
  }

  struct Top {
    VertexID vertex;
    Gain key;
  };

  Top deleteMax() {
    HP_ASSERT(!empty());
    const Top top{_heap[0].vertex, _heap[0].key};
    _pos[top.vertex] = kAbsent;
    if (_heap.size() > 1) {
      _heap[0] = _heap.back();
      _pos[_heap[0].vertex] = 0;
      _heap.pop_back();
      siftDown(0);
    } else {
      _heap.pop_back();
    }
    return top;
  }

  void remove(VertexID v) {
    HP_ASSERT(contains(v));
    const size_t i = _pos[v];
    _pos[v] = kAbsent;
    if (i + 1 != _heap.size()) {
      _heap[i] = _heap.back();
      _pos[_heap[i].vertex] = static_cast<int32_t>(i);
      _heap.pop_back();
      if (!siftUp(i)) {
        siftDown(i);
      }
    } else {
      _heap.pop_back();
    }
  }

  void clear() {
    for (const Entry& entry : _heap) {
      _pos[entry.vertex] = kAbsent;
    }
    _heap.clear();
  }

  template <typename F>
  void forEach(F&& f) const {
    for (const Entry& entry : _heap) {
      f(entry.vertex, entry.key);
    }
  }

 private:
  static constexpr int32_t kAbsent = -1;

  struct Entry {
    Gain key;
    uint64_t recency;
    VertexID vertex;
  };

  bool before(const Entry& a, const Entry& b) const {
    return a.key > b.key || (a.key == b.key && a.recency > b.recency);
  }

  bool siftUp(size_t i) {
    const Entry entry = _heap[i];
    bool moved = false;
    while (i > 0) {
      const size_t parent = (i - 1) / 4;
      if (!before(entry, _heap[parent])) {
        break;
      }
      _heap[i] = _heap[parent];
      _pos[_heap[i].vertex] = static_cast<int32_t>(i);
      i = parent;
      moved = true;
    }
    _heap[i] = entry;
    _pos[entry.vertex] = static_cast<int32_t>(i);
    return moved;
  }

  void siftDown(size_t i) {
    const Entry entry = _heap[i];
    const size_t n = _heap.size();
    while (true) {
      const size_t first_child = 4 * i + 1;
      if (first_child >= n) {
        break;
      }
      size_t best = first_child;
      const size_t last_child = std::min(first_child + 4, n);
      for (size_t c = first_child + 1; c < last_child; ++c) {
        if (before(_heap[c], _heap[best])) {
          best = c;
        }
      }
      if (!before(_heap[best], entry)) {
        break;
      }
      _heap[i] = _heap[best];
      _pos[_heap[i].vertex] = static_cast<int32_t>(i);
      i = best;
    }
    _heap[i] = entry;
    _pos[entry.vertex] = static_cast<int32_t>(i);
  }

  std::vector<Entry> _heap;
  std::vector<int32_t> _pos;
  uint64_t _recency = 0;
};

}  // namespace hyperpart
