#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperpart/config.hpp"
#include "hyperpart/hypergraph.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// One hierarchy level as seen by the pipeline; index 0 is the input.
struct LevelStats {
  VertexID num_vertices = 0;
  NetID num_nets = 0;
};

// Metric trace of one uncoarsening level, recorded coarsest first. The
// projected value equals the coarser level's final metric (contraction
// preserves the metric); LP and FM never increase it.
struct LevelRefinementStats {
  Gain projected = 0;
  Gain after_lp = 0;
  Gain after_fm = 0;
};

struct RunStats {
  double community_seconds = 0.0;
  double coarsening_seconds = 0.0;
  double initial_partitioning_seconds = 0.0;
  double lp_seconds = 0.0;
  double fm_seconds = 0.0;
  double rebalance_seconds = 0.0;
  // Total wall time of the run. Phase boundaries overlap only at level
  // handoffs, so total >= max phase time always holds; total >= sum of the
  // phases is not guaranteed and not asserted.
  double total_seconds = 0.0;

  Gain metric = 0;
  double imbalance = 0.0;
  bool balanced = true;

  BlockID k = 1;
  double epsilon = 0.0;
  uint64_t seed = 0;
  int num_threads = 1;

  std::vector<LevelStats> levels;
  std::vector<LevelRefinementStats> refinement;

  size_t pool_reserved_bytes = 0;
  size_t pool_high_water = 0;
  size_t pool_fallbacks = 0;

  double maxPhaseSeconds() const;
};

struct PartitionResult {
  PartitionedHypergraph phg;
  RunStats stats;
};

// Closed-form scratch arena estimate; monotone in every argument.
size_t poolEstimateBytes(VertexID num_vertices, NetID num_nets, size_t num_pins,
                         BlockID k);

// Runs the full multilevel flow: community detection, coarsening, recursive
// initial partitioning on the coarsest level, uncoarsening with label
// propagation and FM refinement per level, and a final rebalancing sweep on
// the input level. Owns its task pool of config.num_threads workers. The
// result references `hg`, which must outlive it. Throws when k exceeds the
// number of vertices.
PartitionResult partition(const Hypergraph& hg, const PartitionConfig& config);

}  // namespace hyperpart
