#include <doctest.h>

#include <set>
#include <vector>

#include "hyperpart/community.hpp"
#include "hyperpart/parallel.hpp"
#include "test_support.hpp"

using namespace hyperpart;
using namespace hyperpart::testing;

namespace {

// Plain graph given as a list of edges, encoded as a hypergraph with two-pin
// nets; its bipartite representation inserts one node per edge.
Hypergraph graphHypergraph(VertexID n, const std::vector<std::pair<VertexID, VertexID>>& edges) {
  std::vector<std::vector<VertexID>> nets;
  for (const auto& [a, b] : edges) {
    nets.push_back({a, b});
  }
  return Hypergraph::fromNetLists(n, nets);
}

PartitionConfig communityConfig(uint64_t seed = 42) {
  PartitionConfig config;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("two disjoint triangles have modularity one half") {
  // Each triangle with its three edge nodes forms one community of the
  // bipartite representation: in(c) = 6, vol(c) = 12, total edge weight 12.
  Hypergraph hg = graphHypergraph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  for (const bool degree_weighting : {false, true}) {
    ClusterGraph g = ClusterGraph::fromHypergraph(hg, degree_weighting);
    REQUIRE(g.numNodes() == 12);
    std::vector<CommunityID> comm(12);
    for (uint32_t u = 0; u < 12; ++u) {
      const bool second = u < 6 ? u >= 3 : u >= 9;
      comm[u] = second ? 1 : 0;
    }
    CHECK(modularity(g, comm) == doctest::Approx(0.5).epsilon(1e-12));
    // The one-community split has modularity 0 and singletons are negative.
    CHECK(modularity(g, std::vector<CommunityID>(12, 0)) ==
          doctest::Approx(0.0).epsilon(1e-12));
    std::vector<CommunityID> singletons(12);
    for (uint32_t u = 0; u < 12; ++u) {
      singletons[u] = u;
    }
    CHECK(modularity(g, singletons) < 0.0);
  }
}

TEST_CASE("contraction preserves modularity exactly") {
  Rng rng(5);
  for (int round = 0; round < 10; ++round) {
    Hypergraph hg = randomHypergraph(rng, 30, 40, 5, true);
    ClusterGraph g = ClusterGraph::fromHypergraph(hg, round % 2 == 0);
    const uint32_t n = g.numNodes();
    // Random grouping into ceil(n / 3) communities, compactly labeled.
    std::vector<uint32_t> group(n);
    for (uint32_t u = 0; u < n; ++u) {
      group[u] = static_cast<uint32_t>(rng.nextBounded((n + 2) / 3));
    }
    std::set<uint32_t> used(group.begin(), group.end());
    std::vector<uint32_t> compact(n, 0);
    uint32_t next = 0;
    for (const uint32_t c : used) {
      compact[c] = next++;
    }
    for (uint32_t u = 0; u < n; ++u) {
      group[u] = compact[group[u]];
    }

    const double before = modularity(g, std::vector<CommunityID>(group.begin(), group.end()));
    ClusterGraph contracted = g.contract(group, next);
    CHECK(contracted.totalVolume() == doctest::Approx(g.totalVolume()).epsilon(1e-12));
    std::vector<CommunityID> singletons(next);
    for (uint32_t c = 0; c < next; ++c) {
      singletons[c] = c;
    }
    CHECK(modularity(contracted, singletons) == doctest::Approx(before).epsilon(1e-10));
  }
}

TEST_CASE("two cliques joined by a bridge split at the bridge") {
  // K4 on {0..3}, K4 on {4..7}, one bridge edge {3, 4}.
  std::vector<std::pair<VertexID, VertexID>> edges;
  for (VertexID a = 0; a < 4; ++a) {
    for (VertexID b = a + 1; b < 4; ++b) {
      edges.push_back({a, b});
      edges.push_back({static_cast<VertexID>(a + 4), static_cast<VertexID>(b + 4)});
    }
  }
  edges.push_back({3, 4});
  Hypergraph hg = graphHypergraph(8, edges);

  for (uint64_t seed = 1; seed <= 3; ++seed) {
    // Uniform arc weights recover the two cliques exactly.
    PartitionConfig uniform = communityConfig(seed);
    uniform.community_degree_weighting = false;
    const CommunityResult two = detectCommunities(hg, uniform);
    REQUIRE(two.num_communities == 2);
    for (VertexID v = 1; v < 4; ++v) {
      CHECK(two.vertex_community[v] == two.vertex_community[0]);
    }
    for (VertexID v = 5; v < 8; ++v) {
      CHECK(two.vertex_community[v] == two.vertex_community[4]);
    }
    CHECK(two.vertex_community[0] != two.vertex_community[4]);

    // Degree weighting may carve out the bridge endpoints, but never forms
    // a community spanning the bridge, and keeps each clique core together.
    const CommunityResult dw = detectCommunities(hg, communityConfig(seed));
    for (VertexID a = 0; a < 4; ++a) {
      for (VertexID b = 4; b < 8; ++b) {
        CHECK(dw.vertex_community[a] != dw.vertex_community[b]);
      }
    }
    CHECK(dw.vertex_community[0] == dw.vertex_community[1]);
    CHECK(dw.vertex_community[1] == dw.vertex_community[2]);
    CHECK(dw.vertex_community[5] == dw.vertex_community[6]);
    CHECK(dw.vertex_community[6] == dw.vertex_community[7]);
  }
}

TEST_CASE("disjoint triangles are separated") {
  Hypergraph hg = graphHypergraph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const CommunityResult result = detectCommunities(hg, communityConfig(7));
  REQUIRE(result.num_communities == 2);
  CHECK(result.vertex_community[0] == result.vertex_community[1]);
  CHECK(result.vertex_community[0] == result.vertex_community[2]);
  CHECK(result.vertex_community[3] == result.vertex_community[4]);
  CHECK(result.vertex_community[3] == result.vertex_community[5]);
  CHECK(result.vertex_community[0] != result.vertex_community[3]);
}

TEST_CASE("modularity trace never decreases when single-threaded") {
  Rng rng(11);
  TaskPool pool(1);
  for (int round = 0; round < 8; ++round) {
    Hypergraph hg = randomHypergraph(rng, 80, 120, 6, round % 2 == 1);
    PartitionConfig config = communityConfig(100 + round);
    config.community_degree_weighting = round % 2 == 0;
    CommunityResult result;
    pool.execute([&] { result = detectCommunities(hg, config); });
    REQUIRE(result.modularity_trace.size() >= 1);
    for (size_t i = 1; i < result.modularity_trace.size(); ++i) {
      CHECK(result.modularity_trace[i] >= result.modularity_trace[i - 1] - 1e-9);
    }
    CHECK(result.num_communities >= 1);
    for (const CommunityID c : result.vertex_community) {
      CHECK(c < result.num_communities);
    }
  }
}

TEST_CASE("detection is deterministic for a fixed seed when single-threaded") {
  Rng rng(23);
  Hypergraph hg = randomHypergraph(rng, 60, 90, 5, false);
  TaskPool pool(1);
  CommunityResult a, b;
  pool.execute([&] { a = detectCommunities(hg, communityConfig(9)); });
  pool.execute([&] { b = detectCommunities(hg, communityConfig(9)); });
  CHECK(a.vertex_community == b.vertex_community);
  CHECK(a.modularity_trace == b.modularity_trace);
}

TEST_CASE("hypergraphs without nets yield singleton communities") {
  Hypergraph hg = Hypergraph::fromNetLists(5, {});
  const CommunityResult result = detectCommunities(hg, communityConfig());
  CHECK(result.num_communities == 5);
  for (VertexID v = 0; v < 5; ++v) {
    CHECK(result.vertex_community[v] == v);
  }
  CHECK(result.modularity_trace == std::vector<double>{0.0});
}

TEST_CASE("communities stay valid on larger random instances in parallel") {
  Rng rng(31);
  TaskPool pool(4);
  Hypergraph hg = randomHypergraph(rng, 300, 500, 8, true);
  CommunityResult result;
  pool.execute([&] { result = detectCommunities(hg, communityConfig(3)); });
  REQUIRE(result.vertex_community.size() == hg.numVertices());
  REQUIRE(result.num_communities >= 1);
  std::set<CommunityID> seen;
  for (const CommunityID c : result.vertex_community) {
    REQUIRE(c < result.num_communities);
    seen.insert(c);
  }
  // Compact labels: every id in [0, num_communities) occurs.
  CHECK(seen.size() == result.num_communities);
}
