#pragma once

#include <cstdint>
#include <span>

#include "hyperpart/config.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Size-constrained label propagation refinement. Runs up to `max_rounds`
// parallel rounds (config.lp_max_rounds when negative) over eligible
// vertices: round one visits every boundary vertex, later rounds the moved
// vertices and their neighbors. Each vertex moves to the neighboring block
// of highest positive gain that has room, or sideways on zero gain when
// that strictly lightens its source block. Every applied move is checked
// against its attributed gain and reverted when negative. Returns the total
// attributed improvement; the metric after equals the metric before minus
// this value for any thread count.
//
// By default every block is capped at (1 + config.epsilon) times the perfect
// weight; `block_limits` (one entry per block) replaces that uniform cap,
// which recursive bipartitioning uses for uneven side targets.
Gain lpRefine(PartitionedHypergraph& phg, const PartitionConfig& config,
              uint64_t seed, int max_rounds = -1,
              std::span<const Weight> block_limits = {});

}  // namespace hyperpart
