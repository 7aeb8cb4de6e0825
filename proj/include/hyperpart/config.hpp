#pragma once

#include <cstdint>
#include <string>

#include "hyperpart/types.hpp"

namespace hyperpart {

// All tunables of one partitioner run. Defaults are the shipped
// configuration; every field is reachable through setOption ("--set
// key=value" on the command line).
struct PartitionConfig {
  BlockID k = 2;
  double epsilon = 0.03;
  uint64_t seed = 0;
  int num_threads = 1;

  bool use_community_detection = true;
  bool use_lp = true;
  bool use_fm = true;

  // Community detection (Louvain on the bipartite representation).
  int community_max_rounds = 5;
  double community_min_move_fraction = 0.01;
  int community_max_depth = 16;
  bool community_degree_weighting = true;

  // Coarsening.
  Weight contraction_limit_multiplier = 160;
  double coarsening_pass_reduction_cutoff = 2.5;
  double coarsening_min_reduction = 1.01;
  int coarsening_sample_interval = 256;
  uint32_t rating_table_capacity = 4096;

  // Initial partitioning.
  int ip_runs_per_algorithm = 20;

  // Label propagation refinement.
  int lp_max_rounds = 5;

  // FM refinement.
  int fm_seeds_per_search = 25;
  double fm_stop_alpha = 1.0;
  int fm_stop_min_moves = 8;
  int fm_max_rounds = 10;
  double fm_min_improvement = 0.0025;
  double fm_time_budget_factor = 8.0;
  size_t fm_overlay_budget_per_thread = size_t{64} << 20;
  bool fm_local_apply = true;
  double fm_rollback_epsilon_factor = 1.25;

  // Exact gain recalculation scratch: dense layout while |E| * k fits the
  // budget, sparse pair index beyond it.
  size_t recalc_dense_budget = size_t{256} << 20;

  // Memory pool: 0 reserves by estimate, negative-like sentinel not needed;
  // any explicit value overrides the estimate (useful to force fallbacks).
  size_t memory_pool_bytes = 0;
  bool memory_pool_enabled = true;

  // Heavy self-checks after every refinement round (tests).
  bool check_bookkeeping = false;

  // Parses "key=value"; throws std::invalid_argument on unknown keys or
  // malformed values.
  void setOption(const std::string& key, const std::string& value);
  void setOption(const std::string& key_equals_value);
};

}  // namespace hyperpart
