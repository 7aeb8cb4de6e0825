#pragma once

#include <bit>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperpart/hypergraph.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

class GainCache;

// Partition state on top of a Hypergraph: per-vertex block ids, per-block
// weights, and for every net the pin count in each block (packed) plus the
// set of blocks it touches (bitset).
//
// Concurrency contract: writers serialize per net through a spin lock; both
// pin-count updates of one move on one net happen inside a single critical
// section. Readers are unsynchronized and may observe stale values, never
// torn ones: a packed entry always lies inside one 64-bit word and all word
// accesses are relaxed atomics.
class PartitionedHypergraph {
 public:
  PartitionedHypergraph(const Hypergraph& hg, BlockID k);

  PartitionedHypergraph(const PartitionedHypergraph&) = delete;
  PartitionedHypergraph& operator=(const PartitionedHypergraph&) = delete;
  PartitionedHypergraph(PartitionedHypergraph&&) = default;
  PartitionedHypergraph& operator=(PartitionedHypergraph&&) = default;

  const Hypergraph& hypergraph() const { return *_hg; }
  BlockID k() const { return _k; }
  Weight totalWeight() const { return _hg->totalWeight(); }

  // Initial assignment: parts only, no bookkeeping. initializePinCounts()
  // then rebuilds pin counts, connectivity sets and block weights in
  // parallel from scratch.
  void setOnlyVertexPart(VertexID u, BlockID b) {
    HP_ASSERT(b >= 0 && b < _k);
    _part[u].store(b, std::memory_order_relaxed);
  }
  void assignPartition(std::span<const BlockID> part);
  void initializePinCounts();

  BlockID partOf(VertexID u) const {
    HP_ASSERT(u < _hg->numVertices());
    return _part[u].load(std::memory_order_relaxed);
  }

  Weight blockWeight(BlockID b) const {
    HP_ASSERT(b >= 0 && b < _k);
    return _block_weights[b].load(std::memory_order_relaxed);
  }

  int32_t pinCountInBlock(NetID e, BlockID b) const {
    HP_ASSERT(e < _hg->numNets() && b >= 0 && b < _k);
    const uint64_t word =
        _pin_counts[e * _phi_words_per_net + static_cast<uint32_t>(b) / _entries_per_word]
            .load(std::memory_order_relaxed);
    const uint32_t shift = (static_cast<uint32_t>(b) % _entries_per_word) * _bits_per_entry;
    return static_cast<int32_t>((word >> shift) & _entry_mask);
  }

  int32_t connectivity(NetID e) const {
    HP_ASSERT(e < _hg->numNets());
    int32_t count = 0;
    for (uint32_t w = 0; w < _lambda_words_per_net; ++w) {
      count += std::popcount(
          _connectivity_sets[e * _lambda_words_per_net + w].load(std::memory_order_relaxed));
    }
    return count;
  }

  // Calls f(b) for every block the net currently touches, in ascending order.
  template <typename F>
  void forBlocksOf(NetID e, F&& f) const {
    for (uint32_t w = 0; w < _lambda_words_per_net; ++w) {
      uint64_t word =
          _connectivity_sets[e * _lambda_words_per_net + w].load(std::memory_order_relaxed);
      while (word != 0) {
        const int bit = std::countr_zero(word);
        f(static_cast<BlockID>(w * 64 + bit));
        word &= word - 1;
      }
    }
  }

  bool isBorderVertex(VertexID u) const {
    for (NetID e : _hg->incidentNets(u)) {
      if (connectivity(e) > 1) {
        return true;
      }
    }
    return false;
  }

  // Reserve-then-move: adds w to the target block weight unless that would
  // exceed `limit`.
  bool tryReserveWeight(BlockID to, Weight w, Weight limit) {
    const Weight after = _block_weights[to].fetch_add(w, std::memory_order_relaxed) + w;
    if (after > limit) {
      _block_weights[to].fetch_sub(w, std::memory_order_relaxed);
      return false;
    }
    return true;
  }

  // Moves u into `to` whose weight gain was already reserved. Returns the
  // attributed gain: +w(e) whenever the source pin count of a net reaches 0,
  // -w(e) whenever the target pin count reaches 1, observed inside the
  // per-net critical sections. Summed over any concurrent move set this
  // telescopes to the exact connectivity metric delta. If `cache` is given,
  // the gain-cache delta rules fire with conditions evaluated in the same
  // critical sections.
  Gain applyMoveReserved(VertexID u, BlockID to, GainCache* cache = nullptr);

  // Reserve + move. Empty if u already is in `to` or the reservation fails.
  std::optional<Gain> tryMove(VertexID u, BlockID to, Weight limit,
                              GainCache* cache = nullptr);

  // Move without a weight limit (reverts, rebalancing fallbacks).
  Gain applyMoveUnchecked(VertexID u, BlockID to, GainCache* cache = nullptr) {
    _block_weights[to].fetch_add(_hg->vertexWeight(u), std::memory_order_relaxed);
    return applyMoveReserved(u, to, cache);
  }

  std::vector<BlockID> extractPartition() const;

  // Recounts all bookkeeping from the part array and compares with the
  // maintained state. Expensive; test and debug use only.
  bool verifyBookkeeping(std::string* what = nullptr) const;

 private:
  friend class GainCache;

  int32_t decPinCount(NetID e, BlockID b) {
    return addToPinCount(e, b, -1);
  }
  int32_t incPinCount(NetID e, BlockID b) {
    return addToPinCount(e, b, 1);
  }
  int32_t addToPinCount(NetID e, BlockID b, int32_t delta);
  void setConnectivityBit(NetID e, BlockID b, bool value);

  const Hypergraph* _hg;
  BlockID _k;
  uint32_t _bits_per_entry;
  uint32_t _entries_per_word;
  uint64_t _entry_mask;
  uint32_t _phi_words_per_net;
  uint32_t _lambda_words_per_net;
  std::vector<AtomicWrapper<BlockID>> _part;
  std::vector<AtomicWrapper<Weight>> _block_weights;
  std::vector<AtomicWrapper<uint64_t>> _pin_counts;
  std::vector<AtomicWrapper<uint64_t>> _connectivity_sets;
  std::unique_ptr<SpinLock[]> _net_locks;
};

}  // namespace hyperpart
