#include "hyperpart/community.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_reduce.h>
#include <tbb/parallel_sort.h>

#include "hyperpart/assertions.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

namespace {

// Sparse per-thread accumulator of arc weight towards each neighboring
// community, cleared in O(touched).
struct NeighborWeights {
  std::vector<double> weight;
  std::vector<CommunityID> touched;

  void ensure(size_t n) {
    if (weight.size() < n) {
      weight.resize(n, 0.0);
    }
  }
  void add(CommunityID c, double w) {
    if (weight[c] == 0.0) {
      touched.push_back(c);
    }
    weight[c] += w;
  }
  void clear() {
    for (const CommunityID c : touched) {
      weight[c] = 0.0;
    }
    touched.clear();
  }
};

void atomicAddDouble(double& slot, double v) {
  std::atomic_ref<double> ref(slot);
  double cur = ref.load(std::memory_order_relaxed);
  while (!ref.compare_exchange_weak(cur, cur + v, std::memory_order_relaxed)) {
  }
}

}  // namespace

ClusterGraph ClusterGraph::fromHypergraph(const Hypergraph& hg, bool degree_weighting) {
  const uint32_t n = hg.numVertices();
  const uint32_t m = hg.numNets();
  ClusterGraph g;
  g._offsets.assign(static_cast<size_t>(n) + m + 1, 0);
  parallelFor(uint32_t{0}, n, [&](uint32_t u) {
    g._offsets[u] = hg.degree(u);
  }, 4096);
  parallelFor(uint32_t{0}, m, [&](uint32_t e) {
    g._offsets[static_cast<size_t>(n) + e] = hg.netSize(e);
  }, 4096);
  exclusivePrefixSum(g._offsets);

  g._arcs.resize(g._offsets.back());
  auto arcWeight = [&](NetID e, VertexID v) {
    const double w = static_cast<double>(hg.netWeight(e));
    return degree_weighting ? w * static_cast<double>(hg.degree(v)) /
                                  static_cast<double>(hg.netSize(e))
                            : w;
  };
  parallelFor(uint32_t{0}, n, [&](uint32_t u) {
    size_t pos = g._offsets[u];
    for (const NetID e : hg.incidentNets(u)) {
      g._arcs[pos++] = Arc{n + e, arcWeight(e, u)};
    }
  }, 1024);
  parallelFor(uint32_t{0}, m, [&](uint32_t e) {
    size_t pos = g._offsets[static_cast<size_t>(n) + e];
    for (const VertexID v : hg.pins(e)) {
      g._arcs[pos++] = Arc{v, arcWeight(e, v)};
    }
  }, 1024);

  g._volume.assign(static_cast<size_t>(n) + m, 0.0);
  parallelFor(size_t{0}, g._volume.size(), [&](size_t u) {
    double vol = 0.0;
    for (const Arc& a : g.arcs(static_cast<uint32_t>(u))) {
      vol += a.weight;
    }
    g._volume[u] = vol;
  }, 1024);
  g._total_volume = tbb::parallel_reduce(
      tbb::blocked_range<size_t>(0, g._volume.size()), 0.0,
      [&](const auto& r, double acc) {
        for (size_t i = r.begin(); i != r.end(); ++i) {
          acc += g._volume[i];
        }
        return acc;
      },
      std::plus<>());
  return g;
}

ClusterGraph ClusterGraph::contract(std::span<const uint32_t> node_to_meta,
                                    uint32_t num_meta) const {
  struct Keyed {
    uint64_t key;
    double weight;
  };
  std::vector<Keyed> pairs(_arcs.size());
  parallelFor(uint32_t{0}, numNodes(), [&](uint32_t u) {
    const uint64_t cu = node_to_meta[u];
    size_t pos = _offsets[u];
    for (const Arc& a : arcs(u)) {
      pairs[pos++] = Keyed{(cu << 32) | node_to_meta[a.target], a.weight};
    }
  }, 1024);
  tbb::parallel_sort(pairs.begin(), pairs.end(),
                     [](const Keyed& a, const Keyed& b) { return a.key < b.key; });

  ClusterGraph g;
  g._offsets.assign(static_cast<size_t>(num_meta) + 1, 0);
  g._arcs.reserve(pairs.size());
  // Merge runs of equal (community, community) keys. A self-pair absorbs
  // both directions of every internal edge plus member self-loops, which is
  // exactly the doubled-loop convention again.
  for (size_t i = 0; i < pairs.size();) {
    const uint64_t key = pairs[i].key;
    double w = 0.0;
    while (i < pairs.size() && pairs[i].key == key) {
      w += pairs[i].weight;
      ++i;
    }
    g._arcs.push_back(Arc{static_cast<uint32_t>(key & 0xffffffffu), w});
    g._offsets[key >> 32]++;
  }
  exclusivePrefixSum(g._offsets);

  g._volume.assign(num_meta, 0.0);
  parallelFor(uint32_t{0}, num_meta, [&](uint32_t c) {
    double vol = 0.0;
    for (const Arc& a : g.arcs(c)) {
      vol += a.weight;
    }
    g._volume[c] = vol;
  }, 2048);
  g._total_volume = _total_volume;
  return g;
}

double modularity(const ClusterGraph& graph, std::span<const CommunityID> node_community) {
  const double total = graph.totalVolume();
  if (total <= 0.0) {
    return 0.0;
  }
  const double m = total / 2.0;
  const double internal_directed = tbb::parallel_reduce(
      tbb::blocked_range<uint32_t>(0, graph.numNodes()), 0.0,
      [&](const auto& r, double acc) {
        for (uint32_t u = r.begin(); u != r.end(); ++u) {
          for (const ClusterGraph::Arc& a : graph.arcs(u)) {
            if (node_community[a.target] == node_community[u]) {
              // A self-loop appears once but already carries both directions.
              acc += a.weight;
            }
          }
        }
        return acc;
      },
      std::plus<>());

  std::vector<double> community_volume(graph.numNodes(), 0.0);
  parallelFor(uint32_t{0}, graph.numNodes(), [&](uint32_t u) {
    atomicAddDouble(community_volume[node_community[u]], graph.volume(u));
  }, 2048);
  const double volume_squares = tbb::parallel_reduce(
      tbb::blocked_range<size_t>(0, community_volume.size()), 0.0,
      [&](const auto& r, double acc) {
        for (size_t c = r.begin(); c != r.end(); ++c) {
          acc += community_volume[c] * community_volume[c];
        }
        return acc;
      },
      std::plus<>());
  return internal_directed / (2.0 * m) - volume_squares / (total * total);
}

namespace {

// One parallel sweep over all nodes in shuffled order; returns the number of
// nodes that changed community.
size_t localMovingRound(const ClusterGraph& graph, std::span<CommunityID> community,
                        std::span<double> community_volume, Rng& order_rng) {
  const uint32_t n = graph.numNodes();
  const double m = graph.totalVolume() / 2.0;
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  order_rng.shuffle(order);

  tbb::enumerable_thread_specific<NeighborWeights> tls;
  std::atomic<size_t> moved{0};
  parallelFor(uint32_t{0}, n, [&](uint32_t i) {
    const uint32_t u = order[i];
    const auto arcs = graph.arcs(u);
    if (arcs.empty()) {
      return;
    }
    NeighborWeights& acc = tls.local();
    acc.ensure(n);
    for (const ClusterGraph::Arc& a : arcs) {
      if (a.target != u) {
        acc.add(community[a.target], a.weight);
      }
    }
    const CommunityID from = community[u];
    const double vol_u = graph.volume(u);
    const double vol_from_rest = community_volume[from] - vol_u;
    const double w_from = acc.weight[from];

    CommunityID best = from;
    double best_delta = 0.0;
    for (const CommunityID c : acc.touched) {
      if (c == from) {
        continue;
      }
      const double delta = (acc.weight[c] - w_from) / m -
                           vol_u * (community_volume[c] - vol_from_rest) / (2.0 * m * m);
      if (delta > best_delta || (delta == best_delta && best != from && c < best)) {
        best = c;
        best_delta = delta;
      }
    }
    if (best != from && best_delta > 0.0) {
      atomicAddDouble(community_volume[from], -vol_u);
      atomicAddDouble(community_volume[best], vol_u);
      community[u] = best;
      moved.fetch_add(1, std::memory_order_relaxed);
    }
    acc.clear();
  }, 64);
  return moved.load();
}

}  // namespace

CommunityResult detectCommunities(const Hypergraph& hg, const PartitionConfig& config) {
  CommunityResult result;
  ClusterGraph graph = ClusterGraph::fromHypergraph(hg, config.community_degree_weighting);

  // Hypergraph vertex -> node of the current (possibly contracted) graph.
  std::vector<uint32_t> vertex_to_node(hg.numVertices());
  std::iota(vertex_to_node.begin(), vertex_to_node.end(), 0u);

  std::vector<CommunityID> community(graph.numNodes());
  std::iota(community.begin(), community.end(), CommunityID{0});
  result.modularity_trace.push_back(modularity(graph, community));

  if (graph.totalVolume() > 0.0) {
    for (int depth = 0; depth < config.community_max_depth; ++depth) {
      std::vector<double> community_volume(graph.numNodes());
      for (uint32_t u = 0; u < graph.numNodes(); ++u) {
        community_volume[u] = graph.volume(u);
      }
      size_t total_moved = 0;
      for (int round = 0; round < config.community_max_rounds; ++round) {
        Rng order_rng = derivedRng(config.seed, depth, round);
        const size_t moved =
            localMovingRound(graph, community, community_volume, order_rng);
        total_moved += moved;
        result.modularity_trace.push_back(modularity(graph, community));
        if (moved < config.community_min_move_fraction * graph.numNodes()) {
          break;
        }
      }
      if (total_moved == 0) {
        break;
      }

      // Compact community labels, then contract. Contraction preserves
      // modularity, so the trace continues seamlessly.
      std::vector<uint32_t> compact(graph.numNodes(), 0);
      for (uint32_t u = 0; u < graph.numNodes(); ++u) {
        compact[community[u]] = 1;
      }
      uint32_t num_meta = 0;
      for (uint32_t c = 0; c < graph.numNodes(); ++c) {
        const uint32_t id = num_meta;
        num_meta += compact[c];
        compact[c] = id;
      }
      if (num_meta == graph.numNodes()) {
        break;  // nothing merged, the current labels are final
      }
      std::vector<uint32_t> node_to_meta(graph.numNodes());
      for (uint32_t u = 0; u < graph.numNodes(); ++u) {
        node_to_meta[u] = compact[community[u]];
      }
      for (uint32_t v = 0; v < hg.numVertices(); ++v) {
        vertex_to_node[v] = node_to_meta[vertex_to_node[v]];
      }
      graph = graph.contract(node_to_meta, num_meta);
      community.assign(graph.numNodes(), 0);
      std::iota(community.begin(), community.end(), CommunityID{0});
    }
  }

  // Final labels for hypergraph vertices, compacted over vertices only.
  constexpr CommunityID kUnassigned = std::numeric_limits<CommunityID>::max();
  result.vertex_community.resize(hg.numVertices());
  std::vector<CommunityID> relabel(graph.numNodes(), kUnassigned);
  CommunityID next = 0;
  for (VertexID v = 0; v < hg.numVertices(); ++v) {
    const CommunityID c = community[vertex_to_node[v]];
    if (relabel[c] == kUnassigned) {
      relabel[c] = next++;
    }
    result.vertex_community[v] = relabel[c];
  }
  result.num_communities = next;
  return result;
}

}  // namespace hyperpart
