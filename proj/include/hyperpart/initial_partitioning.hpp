#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyperpart/config.hpp"
#include "hyperpart/hypergraph.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Flat bipartitioning portfolio, run on a coarsest hypergraph.
enum class FlatAlgorithm : uint8_t {
  kRandom = 0,            // coin-flip assignment, retried then repaired
  kBfs = 1,               // breadth-first growth of block 0 to capacity
  kAlternatingBfs = 2,    // two fronts growing turn by turn
  kGreedyGrowing = 3,     // grow block 0 by the max-gain boundary vertex
  kLpGrowing = 4,         // two seeds, rounds of strongest-connection adoption
};
inline constexpr int kNumFlatAlgorithms = 5;

// Weight goals of one bipartition. Sides may be uneven when an odd number of
// final blocks is split; `target` is the growth capacity the constructive
// algorithms aim for, `limit` the hard bound a side may reach.
struct BipartitionGoals {
  Weight target0 = 0;
  Weight target1 = 0;
  Weight limit0 = 0;
  Weight limit1 = 0;
};

// Even split: both targets ceil(total / 2), both limits with (1 + eps) slack.
BipartitionGoals evenBipartitionGoals(const Hypergraph& hg, double eps);

struct Bipartition {
  std::vector<BlockID> part;  // one of {0, 1} per vertex
  Gain metric = 0;            // connectivity value, equals a recomputation
  bool feasible = false;      // both side weights within their limits
};

// Connectivity metric of a two-block assignment: total weight of nets with
// pins on both sides.
Gain bipartitionMetric(const Hypergraph& hg, std::span<const BlockID> part);

// One run of a single flat algorithm. The result has both blocks nonempty
// whenever the hypergraph has two or more vertices and the weight limits
// permit; a result that violates a side limit is returned with `feasible`
// false rather than repaired (except for kRandom, whose contract retries up
// to five times and then repairs greedily).
Bipartition flatBipartition(const Hypergraph& hg, const BipartitionGoals& goals,
                            uint64_t seed, FlatAlgorithm algorithm);

// Seed used by portfolio task `run` of `algorithm`; exposed so the
// best-of-all-runs contract can be audited from outside.
uint64_t portfolioTaskSeed(uint64_t seed, FlatAlgorithm algorithm, int run);

// Runs every flat algorithm config.ip_runs_per_algorithm times as
// independent parallel tasks with derived seeds, refines each result with
// one sequential label propagation pass, then lets every worker thread
// polish the best bipartition it produced with sequential two-way FM. The
// lexicographically best result wins: feasible before infeasible, smaller
// overload among infeasible, then lower metric, then lower task seed.
Bipartition portfolioBipartition(const Hypergraph& hg,
                                 const BipartitionGoals& goals,
                                 const PartitionConfig& config, uint64_t seed);

// Classical sequential two-way FM. Boundary vertices sit in two gain-keyed
// priority structures; the highest-gain feasible move is applied repeatedly
// (negative gains allowed, each vertex at most once per round), then the
// round rolls back to its best prefix: feasible prefixes first, then lowest
// metric, then shortest. Rounds repeat until one changes nothing. A balanced
// input never becomes imbalanced and the metric never increases unless the
// prefix buys feasibility.
Bipartition twowayFm(const Hypergraph& hg, Bipartition input,
                     const BipartitionGoals& goals);

// One side of a bipartition as its own hypergraph: vertices keep their
// relative order (`to_parent` maps new ids back), nets keep their pins on
// that side and survive if at least two remain, so any partition of the side
// scores exactly what those nets contribute in the parent.
struct SideExtraction {
  Hypergraph hg;
  std::vector<VertexID> to_parent;
};
SideExtraction extractSide(const Hypergraph& hg, std::span<const BlockID> part,
                           BlockID side);

// Multilevel recursive bipartitioning into k blocks: each node coarsens its
// sub-hypergraph (communities restricted from the parent), bipartitions the
// coarsest level with the portfolio, refines back up with label propagation
// plus two-way FM under per-side limits, and recurses on both extracted
// sides in parallel with ceil(k/2) and floor(k/2) blocks, numbering them
// [0, k0) and [k0, k). Per-level slack is (1 + eps)^(1/ceil(log2 k)) - 1 of
// the top-level call, so the compounded imbalance stays within eps up to
// rounding; the caller runs the rebalancer if the final constraint is the
// strict one. k must not exceed the vertex count.
PartitionedHypergraph recursiveBipartition(const Hypergraph& hg, BlockID k,
                                           const PartitionConfig& config,
                                           std::span<const CommunityID> communities,
                                           uint64_t seed);

}  // namespace hyperpart
