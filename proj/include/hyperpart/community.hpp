#pragma once

#include <span>
#include <vector>

#include "hyperpart/config.hpp"
#include "hyperpart/hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Weighted undirected graph in CSR form for the clustering phase. Every
// undirected edge appears as two directed arcs; self-loops appear once but
// carry twice the loop weight, which keeps node volumes equal to plain arc
// weight sums and makes community contraction a pure arc aggregation.
class ClusterGraph {
 public:
  struct Arc {
    uint32_t target;
    double weight;
  };

  // Bipartite representation of a hypergraph: one node per vertex, one node
  // per net (vertex u and net e connected iff u is a pin of e). With degree
  // weighting the arc weight is net weight times pin degree over net size,
  // otherwise the plain net weight.
  static ClusterGraph fromHypergraph(const Hypergraph& hg, bool degree_weighting);

  // Aggregates parallel arcs between communities; node_to_meta must be a
  // compact relabeling (values 0..num_meta-1).
  ClusterGraph contract(std::span<const uint32_t> node_to_meta, uint32_t num_meta) const;

  uint32_t numNodes() const { return static_cast<uint32_t>(_volume.size()); }
  std::span<const Arc> arcs(uint32_t u) const {
    return {_arcs.data() + _offsets[u], _offsets[u + 1] - _offsets[u]};
  }
  double volume(uint32_t u) const { return _volume[u]; }
  double totalVolume() const { return _total_volume; }  // twice the edge weight

 private:
  std::vector<size_t> _offsets;
  std::vector<Arc> _arcs;
  std::vector<double> _volume;
  double _total_volume = 0.0;
};

// Q = sum over communities of in(c)/m - (vol(c)/2m)^2, where in(c) counts
// each internal edge once and m is the total edge weight.
double modularity(const ClusterGraph& graph, std::span<const CommunityID> node_community);

struct CommunityResult {
  std::vector<CommunityID> vertex_community;  // per hypergraph vertex, compact
  CommunityID num_communities = 0;
  // Modularity after the initial singleton state and after every local
  // moving round, across all contraction depths. Community contraction
  // preserves modularity exactly, so the whole trace is one comparable
  // sequence.
  std::vector<double> modularity_trace;
};

// Parallel Louvain on the bipartite representation. Deterministic for a
// fixed seed when run single-threaded.
CommunityResult detectCommunities(const Hypergraph& hg, const PartitionConfig& config);

}  // namespace hyperpart
