#pragma once

#include <cstdint>
#include <vector>

#include "hyperpart/gain_recalculation.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"

namespace hyperpart {

// Outcome of a rebalancing run. `moves` lists every applied move with its
// attributed gain, in application order; replaying the list on the pre-call
// partition reproduces the post-call partition, and the gains telescope to
// the metric delta. If the constraint cannot be met (some vertex is heavier
// than the block limit and has no legal target), `balanced` is false and
// `residual_imbalance` reports how far off the result remains.
struct RebalanceResult {
  std::vector<Move> moves;
  bool balanced = true;
  double residual_imbalance = 0.0;
};

// Restores the epsilon balance constraint on a partition that may violate it
// (refinement runs under a relaxed bound). Phase 1 sweeps the vertices of
// overloaded blocks in parallel and immediately applies any non-negative-gain
// move into a block with weight headroom; vertices whose best feasible move
// would lose metric are queued instead, keyed by the smallest connectivity
// increase. If blocks remain overloaded, phase 2 drains a merged view of the
// queues sequentially, re-verifying each gain from scratch at pop time and
// applying minimum-penalty moves (tie: lighter target block) until every
// block fits. Must be called from inside a TaskPool.
RebalanceResult rebalance(PartitionedHypergraph& phg, double epsilon,
                          uint64_t seed);

}  // namespace hyperpart
