#pragma once

#include <span>
#include <vector>

#include "hyperpart/config.hpp"
#include "hyperpart/hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Clusters may not grow beyond a fraction of the total weight; the bound
// keeps the coarsest level balanceable into k blocks.
inline Weight maxClusterWeight(Weight total_weight, const PartitionConfig& config) {
  const Weight denom = config.contraction_limit_multiplier * config.k;
  return (total_weight + denom - 1) / denom;
}

struct ContractionResult {
  Hypergraph coarse;
  std::vector<VertexID> fine_to_coarse;
};

// Collapses every cluster into one vertex (weights summed; coarse ids follow
// ascending cluster labels), remaps and dedups pins, drops nets left with
// fewer than two pins, and merges nets that became identical into the one
// with the lowest id (weights summed). Any partition of the coarse vertices
// has exactly the connectivity metric of its projection to the fine ones.
ContractionResult contractClusters(const Hypergraph& hg,
                                   std::span<const VertexID> cluster_of);

struct CoarseningLevel {
  Hypergraph hg;
  // Indexed by the vertices of the previous level (the input for level 0).
  std::vector<VertexID> fine_to_coarse;
};

struct CoarseningHierarchy {
  std::vector<CoarseningLevel> levels;

  const Hypergraph& coarsest(const Hypergraph& input) const {
    return levels.empty() ? input : levels.back().hg;
  }
};

// Multilevel coarsening: each level runs one parallel clustering pass where
// vertices join the neighboring cluster of highest heavy-edge rating inside
// their own community, then contracts. Stops at the contraction limit, when
// a pass stops merging, or when the reduction factor falls under the
// configured minimum.
CoarseningHierarchy coarsen(const Hypergraph& hg,
                            std::span<const CommunityID> vertex_community,
                            const PartitionConfig& config);

}  // namespace hyperpart
