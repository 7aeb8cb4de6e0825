#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "hyperpart/initial_partitioning.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"
#include "hyperpart/rebalance.hpp"
#include "test_support.hpp"

namespace hyperpart {

using namespace testing;

namespace {

// Six unit vertices in a simple path: nets {i, i+1}.
Hypergraph pathHypergraph(VertexID n) {
  std::vector<std::vector<VertexID>> nets;
  for (VertexID v = 0; v + 1 < n; ++v) {
    nets.push_back({v, static_cast<VertexID>(v + 1)});
  }
  return Hypergraph::fromNetLists(n, nets);
}

Weight blockWeightOf(const Hypergraph& hg, std::span<const BlockID> part,
                     BlockID b) {
  Weight w = 0;
  for (VertexID v = 0; v < hg.numVertices(); ++v) {
    if (part[v] == b) {
      w += hg.vertexWeight(v);
    }
  }
  return w;
}

bool goalsSatisfied(const Hypergraph& hg, const Bipartition& bp,
                    const BipartitionGoals& goals) {
  return blockWeightOf(hg, bp.part, 0) <= goals.limit0 &&
         blockWeightOf(hg, bp.part, 1) <= goals.limit1;
}

}  // namespace

TEST_CASE("even bipartition goals match the balance constraint") {
  const Hypergraph hg = tinyHypergraph();
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.03);
  CHECK(goals.target0 == 3);
  CHECK(goals.target1 == 3);
  CHECK(goals.limit0 == metrics::maxBlockWeight(hg.totalWeight(), 2, 0.03));
  CHECK(goals.limit1 == goals.limit0);
}

TEST_CASE("bipartition metric agrees with the connectivity oracle") {
  Rng rng(71);
  for (int i = 0; i < 20; ++i) {
    const Hypergraph hg = randomHypergraph(rng, 20, 30, 5, i % 2 == 1);
    const std::vector<BlockID> part = randomPartition(rng, 20, 2);
    CHECK(bipartitionMetric(hg, part) == oracleConnectivityMetric(hg, part));
  }
}

TEST_CASE("every flat algorithm returns a consistent bipartition") {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Hypergraph hg = randomHypergraph(rng, 24, 32, 6, i % 2 == 1);
    const BipartitionGoals goals = evenBipartitionGoals(hg, 0.1);
    for (int a = 0; a < kNumFlatAlgorithms; ++a) {
      const auto algorithm = static_cast<FlatAlgorithm>(a);
      const Bipartition bp =
          flatBipartition(hg, goals, rng.next(), algorithm);
      REQUIRE(bp.part.size() == hg.numVertices());
      for (const BlockID b : bp.part) {
        CHECK(b >= 0);
        CHECK(b < 2);
      }
      CHECK(bp.metric == bipartitionMetric(hg, bp.part));
      CHECK(bp.feasible == goalsSatisfied(hg, bp, goals));
      const Weight w0 = blockWeightOf(hg, bp.part, 0);
      CHECK(w0 > 0);
      CHECK(w0 < hg.totalWeight());
    }
  }
}

TEST_CASE("random assignment lands inside the limits on a small instance") {
  const Hypergraph hg = tinyHypergraph();
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.03);
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const Bipartition bp =
        flatBipartition(hg, goals, seed, FlatAlgorithm::kRandom);
    CHECK(bp.feasible);
    CHECK(blockWeightOf(hg, bp.part, 0) <= goals.limit0);
    CHECK(blockWeightOf(hg, bp.part, 1) <= goals.limit1);
  }
}

TEST_CASE("breadth-first growing keeps block zero connected on a path") {
  const Hypergraph hg = pathHypergraph(6);
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.03);
  bool saw_prefix = false;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    const Bipartition bp =
        flatBipartition(hg, goals, seed, FlatAlgorithm::kBfs);
    std::vector<VertexID> side0;
    for (VertexID v = 0; v < 6; ++v) {
      if (bp.part[v] == 0) {
        side0.push_back(v);
      }
    }
    REQUIRE(side0.size() == 3);
    // Breadth-first growth on a path claims a contiguous interval.
    CHECK(side0.back() - side0.front() == 2);
    if (side0.front() == 0) {
      saw_prefix = true;
    }
  }
  // A seed near the left endpoint grabs the prefix {0, 1, 2}.
  CHECK(saw_prefix);
}

TEST_CASE("greedy growing reaches the balanced optimum on the tiny instance") {
  const Hypergraph hg = tinyHypergraph();
  const auto optimum = bruteForceBipartitionOptimum(hg, 0.03);
  REQUIRE(optimum.has_value());
  REQUIRE(*optimum == 2);
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.03);
  Gain best = std::numeric_limits<Gain>::max();
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Bipartition bp =
        flatBipartition(hg, goals, seed, FlatAlgorithm::kGreedyGrowing);
    REQUIRE(bp.feasible);
    CHECK(bp.metric >= *optimum);
    best = std::min(best, bp.metric);
  }
  CHECK(best == *optimum);
}

TEST_CASE("two-way refinement escapes a local optimum on the tiny instance") {
  const Hypergraph hg = tinyHypergraph();
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.03);
  const std::vector<BlockID> part{0, 1, 1, 0, 1, 1};
  Bipartition input{part, bipartitionMetric(hg, part), false};
  REQUIRE(input.metric == 3);
  const Bipartition out = twowayFm(hg, std::move(input), goals);
  CHECK(out.feasible);
  CHECK(out.metric == 2);
  CHECK(out.metric == bipartitionMetric(hg, out.part));
}

TEST_CASE("two-way refinement is a fixpoint and preserves feasibility") {
  Rng rng(913);
  for (int i = 0; i < 15; ++i) {
    const Hypergraph hg = randomHypergraph(rng, 22, 30, 5, i % 2 == 0);
    const BipartitionGoals goals = evenBipartitionGoals(hg, 0.1);
    for (int a = 0; a < kNumFlatAlgorithms; ++a) {
      Bipartition start = flatBipartition(hg, goals, rng.next(),
                                          static_cast<FlatAlgorithm>(a));
      const bool was_feasible = start.feasible;
      const Gain start_metric = start.metric;
      Bipartition once = twowayFm(hg, std::move(start), goals);
      CHECK(once.metric == bipartitionMetric(hg, once.part));
      CHECK(once.feasible == goalsSatisfied(hg, once, goals));
      if (was_feasible) {
        CHECK(once.feasible);
        CHECK(once.metric <= start_metric);
      }
      const std::vector<BlockID> frozen = once.part;
      const Bipartition twice = twowayFm(hg, std::move(once), goals);
      CHECK(twice.part == frozen);
    }
  }
}

TEST_CASE("portfolio beats every raw flat run and reports its true metric") {
  TaskPool pool(1);
  const Hypergraph hg = tinyHypergraph();
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.03);
  PartitionConfig config;
  const uint64_t seed = 42;
  const Bipartition bp = portfolioBipartition(hg, goals, config, seed);
  REQUIRE(bp.feasible);
  CHECK(bp.metric == bipartitionMetric(hg, bp.part));
  CHECK(bp.metric == 2);

  Gain best_raw = std::numeric_limits<Gain>::max();
  for (int a = 0; a < kNumFlatAlgorithms; ++a) {
    for (int run = 0; run < config.ip_runs_per_algorithm; ++run) {
      const auto algorithm = static_cast<FlatAlgorithm>(a);
      const Bipartition raw = flatBipartition(
          hg, goals, portfolioTaskSeed(seed, algorithm, run), algorithm);
      if (raw.feasible) {
        best_raw = std::min(best_raw, raw.metric);
      }
    }
  }
  REQUIRE(best_raw < std::numeric_limits<Gain>::max());
  CHECK(bp.metric <= best_raw);
}

TEST_CASE("portfolio is deterministic with one worker") {
  TaskPool pool(1);
  Rng rng(77);
  const Hypergraph hg = randomHypergraph(rng, 30, 40, 6, true);
  const BipartitionGoals goals = evenBipartitionGoals(hg, 0.05);
  PartitionConfig config;
  const Bipartition a = portfolioBipartition(hg, goals, config, 9);
  const Bipartition b = portfolioBipartition(hg, goals, config, 9);
  CHECK(a.part == b.part);
  CHECK(a.metric == b.metric);
}

TEST_CASE("side extraction splits the metric exactly") {
  Rng rng(4242);
  for (int i = 0; i < 12; ++i) {
    const Hypergraph hg = randomHypergraph(rng, 26, 34, 6, i % 2 == 1);
    const std::vector<BlockID> part2 = randomPartition(rng, 26, 2);
    const SideExtraction side0 = extractSide(hg, part2, 0);
    const SideExtraction side1 = extractSide(hg, part2, 1);
    REQUIRE(side0.to_parent.size() + side1.to_parent.size() == 26);

    const std::vector<BlockID> sub0 = randomPartition(
        rng, static_cast<VertexID>(side0.to_parent.size()), 2);
    const std::vector<BlockID> sub1 = randomPartition(
        rng, static_cast<VertexID>(side1.to_parent.size()), 2);
    std::vector<BlockID> part4(26, kInvalidBlock);
    for (size_t j = 0; j < side0.to_parent.size(); ++j) {
      part4[side0.to_parent[j]] = sub0[j];
    }
    for (size_t j = 0; j < side1.to_parent.size(); ++j) {
      part4[side1.to_parent[j]] = 2 + sub1[j];
    }
    // A four-way refinement decomposes: the coarse two-way cut plus the
    // metric of each side's own bipartition inside its sub-hypergraph.
    const Gain whole = oracleConnectivityMetric(hg, part4);
    const Gain split = bipartitionMetric(hg, part2) +
                       bipartitionMetric(side0.hg, sub0) +
                       bipartitionMetric(side1.hg, sub1);
    CHECK(whole == split);
  }
}

TEST_CASE("recursive bipartitioning isolates disconnected components") {
  TaskPool pool(1);
  std::vector<std::vector<VertexID>> nets;
  for (VertexID t = 0; t < 4; ++t) {
    const VertexID base = 3 * t;
    nets.push_back({base, static_cast<VertexID>(base + 1)});
    nets.push_back({static_cast<VertexID>(base + 1),
                    static_cast<VertexID>(base + 2)});
    nets.push_back({base, static_cast<VertexID>(base + 2)});
  }
  const Hypergraph hg = Hypergraph::fromNetLists(12, nets);
  PartitionConfig config;
  config.k = 4;
  const std::vector<CommunityID> communities(12, 0);
  PartitionedHypergraph phg =
      recursiveBipartition(hg, 4, config, communities, 3);
  CHECK(metrics::connectivityMetric(phg) == 0);
  std::vector<bool> used(4, false);
  for (VertexID t = 0; t < 4; ++t) {
    const BlockID b = phg.partOf(3 * t);
    CHECK(phg.partOf(3 * t + 1) == b);
    CHECK(phg.partOf(3 * t + 2) == b);
    used[b] = true;
  }
  CHECK(std::all_of(used.begin(), used.end(), [](bool u) { return u; }));
}

TEST_CASE("recursive bipartitioning uses every block and ends balanced") {
  TaskPool pool(1);
  Rng rng(2026);
  for (const BlockID k : {2, 3, 5, 8}) {
    const Hypergraph hg = randomHypergraph(rng, 40, 60, 6, k % 2 == 1);
    PartitionConfig config;
    config.k = k;
    const std::vector<CommunityID> communities(40, 0);
    PartitionedHypergraph phg =
        recursiveBipartition(hg, k, config, communities, k);
    REQUIRE(phg.k() == k);
    std::vector<Weight> counts(k, 0);
    for (VertexID v = 0; v < 40; ++v) {
      REQUIRE(phg.partOf(v) >= 0);
      REQUIRE(phg.partOf(v) < k);
      ++counts[phg.partOf(v)];
    }
    for (const Weight c : counts) {
      CHECK(c > 0);
    }
    CHECK(phg.verifyBookkeeping());
    const Gain before = metrics::connectivityMetric(phg);
    if (!metrics::isBalanced(phg, config.epsilon)) {
      const RebalanceResult result = rebalance(phg, config.epsilon, 7);
      CHECK(result.balanced);
    }
    CHECK(metrics::isBalanced(phg, config.epsilon));
    CHECK(metrics::connectivityMetric(phg) >= 0);
    (void)before;
  }
}

TEST_CASE("recursive bipartitioning handles the degenerate block counts") {
  TaskPool pool(1);
  const Hypergraph hg = tinyHypergraph();
  PartitionConfig config;
  const std::vector<CommunityID> communities(6, 0);

  PartitionedHypergraph one = recursiveBipartition(hg, 1, config, communities, 0);
  CHECK(metrics::connectivityMetric(one) == 0);
  for (VertexID v = 0; v < 6; ++v) {
    CHECK(one.partOf(v) == 0);
  }

  config.k = 2;
  PartitionedHypergraph two = recursiveBipartition(hg, 2, config, communities, 0);
  CHECK(metrics::isBalanced(two, config.epsilon));
  CHECK(metrics::connectivityMetric(two) == 2);

  CHECK_THROWS_AS(recursiveBipartition(hg, 7, config, communities, 0),
                  std::runtime_error);
}

}  // namespace hyperpart
