#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hyperpart/hypergraph.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/random.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart::testing {

// Shared small fixture: 4 nets {0,1,2}, {2,3}, {3,4,5}, {0,3} on 6 unit
// vertices. The hMetis encoding lives in kTinyHgr.
extern const char* const kTinyHgr;
Hypergraph tinyHypergraph();

// Oracles. All of them work on the raw part array and never touch the
// maintained bookkeeping they are used to check.

// Per-net distinct-block count via sorting a copy of the pin blocks.
Gain oracleConnectivityMetric(const Hypergraph& hg, std::span<const BlockID> part);

struct ReplayMove {
  VertexID u;
  BlockID to;
};

// Applies moves one by one to a copy of `part` and returns the exact metric
// delta (gain) of each move in sequence order.
std::vector<Gain> sequentialReplayGains(const Hypergraph& hg,
                                        std::vector<BlockID> part,
                                        std::span<const ReplayMove> moves);

// Exhaustive balanced-bipartition optimum; empty when no assignment is
// balanced. Only usable for small vertex counts.
std::optional<Gain> bruteForceBipartitionOptimum(const Hypergraph& hg, double eps);

// Quadratic pairwise comparison of sorted pin lists; returns for every net
// the smallest net id with identical pins (its own id if unique).
std::vector<NetID> identicalNetGroupsBrute(const Hypergraph& hg);

// Random test instances.
Hypergraph randomHypergraph(Rng& rng, VertexID n, NetID m, size_t max_net_size,
                            bool random_weights = false);
std::vector<BlockID> randomPartition(Rng& rng, VertexID n, BlockID k);

// Random move sequence with current-part sources; vertices may repeat unless
// distinct is set.
std::vector<ReplayMove> randomMoves(Rng& rng, const Hypergraph& hg,
                                    std::span<const BlockID> part, BlockID k,
                                    size_t count, bool distinct_vertices);

PartitionedHypergraph makePartitioned(const Hypergraph& hg, BlockID k,
                                      std::span<const BlockID> part);

}  // namespace hyperpart::testing
