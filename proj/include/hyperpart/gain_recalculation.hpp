#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hyperpart/config.hpp"
#include "hyperpart/memory_pool.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

struct Move {
  VertexID u = kInvalidVertex;
  BlockID from = kInvalidBlock;
  BlockID to = kInvalidBlock;
  Gain gain = 0;  // exact sequential-order gain, filled by recalculateGains
};

using MoveSequence = std::vector<Move>;

// Whether the partition passed to recalculateGains reflects the state before
// the sequence (oracle/tests) or after it (refinement rounds, where moves
// were already applied).
enum class PinCountsState { kRoundStart, kRoundEnd };

// Recomputes, in parallel, the exact gain every move would have had if the
// sequence ran alone in id order. Two phases over two counters and two
// min/max registers per touched (net, block) pair:
//   out(e, i), max_out(e, i): moves leaving block i of net e
//   in(e, i),  min_in(e, i):  moves entering block i of net e
// The j-th move removes the last source pin of e iff the source residue
// (start count minus all leavers) is zero, j is the last leaver, and no
// arrival precedes j; symmetrically for the first target pin. Two-pin nets
// skip the counters and recompute from the other pin's timeline directly.
//
// The scratch is dense (per net-with->=3-pins times k) while it fits the
// byte budget, and a sorted (net, block) pair index otherwise. Both paths
// produce identical output for any thread count.
class GainRecalculator {
 public:
  explicit GainRecalculator(size_t dense_budget_bytes = size_t{256} << 20,
                            MemoryPool* pool = nullptr);

  // Exposes the reconstruction predicates for probing; j is the 1-based
  // index into the move sequence, e must be incident to moves[j-1].u.
  class Probes {
   public:
    virtual ~Probes() = default;
    // Pin count of e in the move's source block was exactly 1 right before
    // move j (the move removes the last source pin).
    virtual bool removesLastSourcePin(NetID e, size_t j) const = 0;
    // Pin count of e in the move's target block was exactly 0 right before
    // move j (the move adds the first target pin).
    virtual bool addsFirstTargetPin(NetID e, size_t j) const = 0;
  };
  using ProbeFn = std::function<void(const Probes&)>;

  void recalculateGains(const PartitionedHypergraph& phg, PinCountsState state,
                        MoveSequence& moves, const ProbeFn& probe_fn = {});

  bool usedDenseScratch() const { return _used_dense; }

 private:
  void ensureScratch(size_t ints);
  void computeSlots(const Hypergraph& hg, BlockID k);

  size_t _dense_budget;
  MemoryPool* _pool;
  bool _used_dense = false;

  std::vector<uint32_t> _net_slot;  // nets with >= 3 pins -> slot, else invalid
  size_t _num_slots = 0;

  std::vector<int32_t> _move_index;   // per vertex, 1-based move id; 0 = unmoved
  std::vector<uint64_t> _sparse_keys;  // sorted touched (slot, block) keys

  // Four equally sized register planes (out, in, max_out, min_in) in one
  // backing array; all-zero is the rest state (a zero min-in register reads
  // as "no arrival").
  std::vector<int32_t> _own_scratch;
  std::span<int32_t> _pool_scratch;
  int32_t* _scratch = nullptr;
  size_t _scratch_ints = 0;
};

struct PrefixResult {
  size_t length = 0;
  Gain gain = 0;
};

// Longest best prefix of the sequence whose cumulative exact gain is maximal
// and positive among prefixes keeping every block at or below `limit`
// (weights evaluated from `start_block_weights`). Returns {0, 0} when no
// balanced prefix improves. Chunked parallel scan; exact for any chunking.
PrefixResult bestBalancedPrefix(const Hypergraph& hg, std::span<const Move> moves,
                                std::span<const Weight> start_block_weights,
                                Weight limit);

}  // namespace hyperpart
