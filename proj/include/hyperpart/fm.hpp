#pragma once

#include <cstdint>

#include "hyperpart/config.hpp"
#include "hyperpart/gain_cache.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Parallel localized k-way FM. Threads run non-overlapping searches seeded
// from a shared boundary queue; applied moves form a global sequence whose
// exact gains are recalculated afterwards, keeping only the best prefix
// that stays within the relaxed balance bound (epsilon times the rollback
// factor). Rounds repeat until the relative improvement falls under
// fm_min_improvement or fm_max_rounds is hit; when `coarsening_seconds` is
// nonnegative, exceeding fm_time_budget_factor times it degrades the search
// (global applies, no vertex releases) so the refiner winds down quickly.
// Returns the total exact improvement; the metric never increases.
Gain fmRefine(PartitionedHypergraph& phg, GainCache& cache,
              const PartitionConfig& config, uint64_t seed,
              double coarsening_seconds = -1.0);

}  // namespace hyperpart
