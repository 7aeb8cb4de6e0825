#pragma once

#include <atomic>
#include <span>
#include <string>
#include <vector>

#include "hyperpart/memory_pool.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Cached gain terms for k-way moves, one benefit entry per vertex and one
// penalty entry per (vertex, block):
//   benefit(u)     = w({e in I(u) : pin count of e in block(u) is 1})
//   penalty(u, i)  = w({e in I(u) : pin count of e in block i is 0})
//   gain(u -> i)   = benefit(u) - penalty(u, i)
//
// Moves keep the cache coherent through four delta rules fired per net
// crossing (conditions evaluated inside the net's critical section, the
// updates themselves are commutative atomic adds):
//   source count hit 0: penalty(v, from) += w(e) for every pin v
//   source count hit 1: benefit(v) += w(e) for every pin v still in `from`
//   target count hit 1: penalty(v, to) -= w(e) for every pin v
//   target count hit 2: benefit(v) -= w(e) for every pin v in `to`
// benefit(u) of a vertex that itself moved cannot be patched this way (one
// shared location, two blocks involved); recomputeBenefits() restores those
// after the move set quiesced.
class GainCache {
 public:
  GainCache() = default;

  void initialize(const PartitionedHypergraph& phg, MemoryPool* pool = nullptr);
  bool isInitialized() const { return _benefit != nullptr; }
  void release();

  BlockID k() const { return _k; }

  Gain benefit(VertexID u) const {
    return std::atomic_ref<Gain>(_benefit[u]).load(std::memory_order_relaxed);
  }
  Gain penalty(VertexID u, BlockID to) const {
    return std::atomic_ref<Gain>(_penalty[u * static_cast<size_t>(_k) + to])
        .load(std::memory_order_relaxed);
  }
  Gain gain(VertexID u, BlockID to) const { return benefit(u) - penalty(u, to); }

  void applyDeltaRules(const PartitionedHypergraph& phg, NetID e, BlockID from,
                       BlockID to, bool source_empty, bool source_single,
                       bool target_first, bool target_second);

  void recomputeBenefits(const PartitionedHypergraph& phg,
                         std::span<const VertexID> vertices);

  static Gain benefitFromScratch(const PartitionedHypergraph& phg, VertexID u);
  static Gain penaltyFromScratch(const PartitionedHypergraph& phg, VertexID u,
                                 BlockID to);
  static Gain gainFromScratch(const PartitionedHypergraph& phg, VertexID u,
                              BlockID to) {
    return benefitFromScratch(phg, u) - penaltyFromScratch(phg, u, to);
  }

  // Compares every cached entry with its from-scratch definition.
  bool verifyAgainstScratch(const PartitionedHypergraph& phg,
                            std::string* what = nullptr) const;

 private:
  friend class PartitionedHypergraph;

  void addBenefit(VertexID u, Gain delta) {
    std::atomic_ref<Gain>(_benefit[u]).fetch_add(delta, std::memory_order_relaxed);
  }
  void addPenalty(VertexID u, BlockID b, Gain delta) {
    std::atomic_ref<Gain>(_penalty[u * static_cast<size_t>(_k) + b])
        .fetch_add(delta, std::memory_order_relaxed);
  }

  BlockID _k = 0;
  Gain* _benefit = nullptr;
  Gain* _penalty = nullptr;
  std::vector<Gain> _owned_benefit;
  std::vector<Gain> _owned_penalty;
  std::span<Gain> _pooled_benefit;
  std::span<Gain> _pooled_penalty;
};

}  // namespace hyperpart
