#include <doctest.h>

#include <algorithm>
#include <vector>

#include "hyperpart/addressable_pq.hpp"
#include "hyperpart/config.hpp"
#include "hyperpart/fm.hpp"
#include "hyperpart/gain_cache.hpp"
#include "hyperpart/hypergraph.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/random.hpp"
#include "test_support.hpp"

namespace hyperpart {
namespace {

using testing::makePartitioned;
using testing::oracleConnectivityMetric;
using testing::randomHypergraph;
using testing::randomPartition;
using testing::tinyHypergraph;

PartitionConfig fmConfig(BlockID k, double eps, int threads) {
  PartitionConfig config;
  config.k = k;
  config.epsilon = eps;
  config.num_threads = threads;
  return config;
}

TEST_CASE("addressable pq orders by key with most-recent tie-break") {
  AddressablePQ pq;
  pq.resize(10);
  pq.insert(0, 5);
  pq.insert(1, 7);
  pq.insert(2, 7);
  pq.insert(3, 1);
  REQUIRE(pq.size() == 4);
  CHECK(pq.contains(2));
  CHECK(pq.keyOf(2) == 7);

  // 2 was inserted after 1; equal keys pop the newer entry first.
  AddressablePQ::Top top = pq.deleteMax();
  CHECK(top.vertex == 2);
  CHECK(top.key == 7);
  top = pq.deleteMax();
  CHECK(top.vertex == 1);

  pq.insertOrAdjust(3, 9);
  CHECK(pq.deleteMax().vertex == 3);
  CHECK(pq.deleteMax().vertex == 0);
  CHECK(pq.empty());

  pq.insert(4, 2);
  pq.insert(5, 3);
  pq.remove(4);
  CHECK(!pq.contains(4));
  CHECK(pq.deleteMax().vertex == 5);
  CHECK(pq.empty());

  pq.insert(6, 1);
  pq.clear();
  CHECK(pq.empty());
  CHECK(!pq.contains(6));
}

TEST_CASE("a local optimum is an fm fixpoint") {
  const Hypergraph hg = tinyHypergraph();
  const std::vector<BlockID> part = {0, 0, 0, 1, 1, 1};
  PartitionedHypergraph phg = makePartitioned(hg, 2, part);
  GainCache cache;
  cache.initialize(phg);
  REQUIRE(metrics::connectivityMetric(phg) == 2);

  TaskPool pool(1);
  Gain improvement = -1;
  pool.execute([&] {
    improvement = fmRefine(phg, cache, fmConfig(2, 0.03, 1), 11);
  });
  CHECK(improvement == 0);
  CHECK(metrics::connectivityMetric(phg) == 2);
  CHECK(phg.extractPartition() == part);
  CHECK(cache.verifyAgainstScratch(phg));
}

TEST_CASE("one round from the worst balanced split reaches near the optimum") {
  const Hypergraph hg = tinyHypergraph();
  // Enumerate all balanced bipartitions; pick the worst as the start.
  const Weight limit = metrics::maxBlockWeight(hg.totalWeight(), 2, 0.03);
  std::vector<BlockID> worst;
  Gain worst_metric = -1;
  Gain best_metric = -1;
  for (uint32_t mask = 0; mask < (1u << 6); ++mask) {
    std::vector<BlockID> part(6);
    Weight w0 = 0;
    for (VertexID u = 0; u < 6; ++u) {
      part[u] = (mask >> u) & 1 ? 1 : 0;
      w0 += part[u] == 0 ? 1 : 0;
    }
    if (w0 > limit || static_cast<Weight>(6 - w0) > limit) {
      continue;
    }
    const Gain metric = oracleConnectivityMetric(hg, part);
    if (metric > worst_metric) {
      worst_metric = metric;
      worst = part;
    }
    if (best_metric < 0 || metric < best_metric) {
      best_metric = metric;
    }
  }
  REQUIRE(!worst.empty());
  REQUIRE(best_metric == 2);

  TaskPool pool(1);
  {
    // At eps = 0.03 the limit is exactly 3, so every move from a 3/3 split
    // is infeasible: the refiner must hold still rather than cheat.
    PartitionedHypergraph phg = makePartitioned(hg, 2, worst);
    GainCache cache;
    cache.initialize(phg);
    PartitionConfig config = fmConfig(2, 0.03, 1);
    config.fm_max_rounds = 1;
    Gain improvement = -1;
    pool.execute([&] { improvement = fmRefine(phg, cache, config, 3); });
    CHECK(improvement == 0);
    CHECK(metrics::connectivityMetric(phg) == worst_metric);
  }
  {
    // With room to move (limit 4), one round escapes the worst split.
    PartitionedHypergraph phg = makePartitioned(hg, 2, worst);
    GainCache cache;
    cache.initialize(phg);
    PartitionConfig config = fmConfig(2, 0.5, 1);
    config.fm_max_rounds = 1;
    Gain improvement = 0;
    pool.execute([&] { improvement = fmRefine(phg, cache, config, 3); });
    CHECK(metrics::connectivityMetric(phg) == worst_metric - improvement);
    CHECK(metrics::connectivityMetric(phg) <= best_metric + 1);
  }
}

TEST_CASE("improvement equals the realized metric delta on any thread count") {
  Rng rng(8282);
  for (const int threads : {1, 2, 8}) {
    TaskPool pool(threads);
    for (const bool local_apply : {true, false}) {
      for (int round = 0; round < 5; ++round) {
        const Hypergraph hg = randomHypergraph(
            rng, 100 + rng.nextBounded(100), 180 + rng.nextBounded(120), 5,
            true);
        const BlockID k = 2 + static_cast<BlockID>(rng.nextBounded(3));
        std::vector<BlockID> part(hg.numVertices());
        for (VertexID u = 0; u < hg.numVertices(); ++u) {
          part[u] = static_cast<BlockID>(u % k);
        }
        PartitionedHypergraph phg = makePartitioned(hg, k, part);
        GainCache cache;
        cache.initialize(phg);
        const Gain before = metrics::connectivityMetric(phg);

        PartitionConfig config = fmConfig(k, 0.1, threads);
        config.fm_local_apply = local_apply;
        Gain improvement = 0;
        pool.execute([&] {
          improvement = fmRefine(phg, cache, config, 500 + round);
        });
        CHECK(improvement >= 0);
        CHECK(metrics::connectivityMetric(phg) == before - improvement);
        CHECK(phg.verifyBookkeeping());
        CHECK(cache.verifyAgainstScratch(phg));
      }
    }
  }
}

TEST_CASE("refinement stays within the relaxed balance bound") {
  Rng rng(929);
  TaskPool pool(4);
  for (int round = 0; round < 6; ++round) {
    const Hypergraph hg = randomHypergraph(rng, 150, 260, 4, false);
    const BlockID k = 2 + static_cast<BlockID>(rng.nextBounded(2));
    const double eps = 0.05;
    std::vector<BlockID> part(hg.numVertices());
    for (VertexID u = 0; u < hg.numVertices(); ++u) {
      part[u] = static_cast<BlockID>(u % k);
    }
    PartitionedHypergraph phg = makePartitioned(hg, k, part);
    GainCache cache;
    cache.initialize(phg);
    PartitionConfig config = fmConfig(k, eps, 4);

    pool.execute([&] { fmRefine(phg, cache, config, 77 + round); });
    const Weight relaxed = metrics::maxBlockWeight(
        hg.totalWeight(), k, eps * config.fm_rollback_epsilon_factor);
    for (BlockID b = 0; b < k; ++b) {
      CHECK(phg.blockWeight(b) <= relaxed);
    }
  }
}

TEST_CASE("an internal partition produces no moves") {
  // Two fully separated components, each its own block: no boundary.
  const Hypergraph hg =
      Hypergraph::fromNetLists(6, {{0, 1, 2}, {3, 4, 5}, {0, 2}, {3, 5}});
  const std::vector<BlockID> part = {0, 0, 0, 1, 1, 1};
  PartitionedHypergraph phg = makePartitioned(hg, 2, part);
  GainCache cache;
  cache.initialize(phg);
  TaskPool pool(2);
  Gain improvement = -1;
  pool.execute([&] {
    improvement = fmRefine(phg, cache, fmConfig(2, 0.03, 2), 1);
  });
  CHECK(improvement == 0);
  CHECK(phg.extractPartition() == part);
}

TEST_CASE("local and global apply agree on single-threaded runs") {
  Rng rng(6231);
  TaskPool pool(1);
  for (int round = 0; round < 8; ++round) {
    const Hypergraph hg = randomHypergraph(
        rng, 90 + rng.nextBounded(90), 160 + rng.nextBounded(120), 5, true);
    const BlockID k = 2 + static_cast<BlockID>(rng.nextBounded(3));
    std::vector<BlockID> part(hg.numVertices());
    for (VertexID u = 0; u < hg.numVertices(); ++u) {
      part[u] = static_cast<BlockID>(u % k);
    }
    const uint64_t seed = 4000 + round;

    std::vector<BlockID> local_result;
    std::vector<BlockID> global_result;
    Gain local_improvement = 0;
    Gain global_improvement = 0;
    {
      PartitionedHypergraph phg = makePartitioned(hg, k, part);
      GainCache cache;
      cache.initialize(phg);
      PartitionConfig config = fmConfig(k, 0.1, 1);
      config.fm_local_apply = true;
      pool.execute([&] {
        local_improvement = fmRefine(phg, cache, config, seed);
      });
      local_result = phg.extractPartition();
    }
    {
      PartitionedHypergraph phg = makePartitioned(hg, k, part);
      GainCache cache;
      cache.initialize(phg);
      PartitionConfig config = fmConfig(k, 0.1, 1);
      config.fm_local_apply = false;
      pool.execute([&] {
        global_improvement = fmRefine(phg, cache, config, seed);
      });
      global_result = phg.extractPartition();
    }
    CHECK(local_improvement == global_improvement);
    CHECK(local_result == global_result);
  }
}

TEST_CASE("refinement only improves across many random instances") {
  Rng rng(111);
  TaskPool pool(2);
  for (int round = 0; round < 10; ++round) {
    const Hypergraph hg = randomHypergraph(
        rng, 60 + rng.nextBounded(140), 100 + rng.nextBounded(200), 6, true);
    const BlockID k = 2 + static_cast<BlockID>(rng.nextBounded(4));
    const std::vector<BlockID> part = randomPartition(rng, hg.numVertices(), k);
    PartitionedHypergraph phg = makePartitioned(hg, k, part);
    GainCache cache;
    cache.initialize(phg);
    const Gain before = metrics::connectivityMetric(phg);

    Gain improvement = 0;
    pool.execute([&] {
      improvement = fmRefine(phg, cache, fmConfig(k, 0.2, 2), 808 + round);
    });
    CHECK(improvement >= 0);
    CHECK(metrics::connectivityMetric(phg) <= before);
    CHECK(metrics::connectivityMetric(phg) == before - improvement);
  }
}

}  // namespace
}  // namespace hyperpart
