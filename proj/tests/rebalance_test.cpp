#include <doctest.h>

#include <algorithm>
#include <vector>

#include "hyperpart/rebalance.hpp"

#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"
#include "test_support.hpp"

namespace hyperpart {
using namespace testing;
namespace {

Hypergraph pairNetHypergraph() {
  // Nets {0,1} w2 and {2,3} w3 on six unit vertices; 4 and 5 are isolated.
  std::vector<size_t> offsets{0, 2, 4};
  std::vector<VertexID> pins{0, 1, 2, 3};
  return Hypergraph::build(6, offsets, pins, {2, 3}, {});
}

}  // namespace

TEST_CASE("balanced input needs no rebalancing moves") {
  const Hypergraph hg = tinyHypergraph();
  TaskPool pool(2);
  pool.execute([&] {
    const std::vector<BlockID> part{0, 0, 0, 1, 1, 1};
    PartitionedHypergraph phg = makePartitioned(hg, 2, part);
    const RebalanceResult result = rebalance(phg, 0.03, 7);
    CHECK(result.balanced);
    CHECK(result.moves.empty());
    CHECK(result.residual_imbalance <= 0.03);
  });
}

TEST_CASE("a 5/1 split at eps 0.03 moves exactly two vertices over") {
  const Hypergraph hg = tinyHypergraph();
  for (const int threads : {1, 4}) {
    CAPTURE(threads);
    TaskPool pool(threads);
    pool.execute([&] {
      const std::vector<BlockID> part{0, 0, 0, 0, 0, 1};
      PartitionedHypergraph phg = makePartitioned(hg, 2, part);
      const Gain before = metrics::connectivityMetric(phg);
      const RebalanceResult result = rebalance(phg, 0.03, 99);
      CHECK(result.balanced);
      CHECK(phg.blockWeight(0) == 3);
      CHECK(phg.blockWeight(1) == 3);
      // Exactly two vertices end up displaced, all of them 0 -> 1.
      int displaced = 0;
      for (VertexID u = 0; u < 6; ++u) {
        if (phg.partOf(u) == 1 && u != 5) {
          ++displaced;
        }
      }
      CHECK(displaced == 2);
      CHECK(phg.partOf(5) == 1);
      Gain applied = 0;
      for (const Move& m : result.moves) {
        applied += m.gain;
      }
      CHECK(metrics::connectivityMetric(phg) == before - applied);
      REQUIRE(phg.verifyBookkeeping());
    });
  }
}

TEST_CASE("zero-gain moves fix the balance without touching the metric") {
  // Only net {0,1}; vertices 2..4 are isolated, so draining the overloaded
  // block costs nothing and the expensive second phase must not run.
  std::vector<size_t> offsets{0, 2};
  std::vector<VertexID> pins{0, 1};
  const Hypergraph hg = Hypergraph::build(6, offsets, pins, {}, {});
  TaskPool pool(1);
  pool.execute([&] {
    const std::vector<BlockID> part{0, 0, 0, 0, 0, 1};
    PartitionedHypergraph phg = makePartitioned(hg, 2, part);
    const Gain before = metrics::connectivityMetric(phg);
    const RebalanceResult result = rebalance(phg, 0.03, 3);
    CHECK(result.balanced);
    CHECK(metrics::connectivityMetric(phg) == before);
    CHECK(result.moves.size() == 2);
    for (const Move& m : result.moves) {
      CHECK(m.gain == 0);
      CHECK(m.from == 0);
      CHECK(m.to == 1);
      CHECK(hg.incidentNets(m.u).empty());
    }
  });
}

TEST_CASE("free moves go first and the paid remainder costs the minimum penalty") {
  // From {0,1,2,3,4 | 5} two moves are needed. The isolated vertex 4 is free;
  // afterwards the cheapest paid move is vertex 0 or 1 (penalty 2, beating
  // the w3 net pair), and the tie goes to the lower id.
  const Hypergraph hg = pairNetHypergraph();
  TaskPool pool(1);
  pool.execute([&] {
    const std::vector<BlockID> part{0, 0, 0, 0, 0, 1};
    PartitionedHypergraph phg = makePartitioned(hg, 2, part);
    REQUIRE(metrics::connectivityMetric(phg) == 0);
    const RebalanceResult result = rebalance(phg, 0.03, 11);
    CHECK(result.balanced);
    CHECK(metrics::connectivityMetric(phg) == 2);
    REQUIRE(result.moves.size() == 2);
    CHECK(result.moves[0].u == 4);
    CHECK(result.moves[0].gain == 0);
    CHECK(result.moves[1].u == 0);
    CHECK(result.moves[1].gain == -2);
    CHECK(phg.partOf(4) == 1);
    CHECK(phg.partOf(0) == 1);
  });
}

TEST_CASE("stale queue keys are re-verified at pop time") {
  // All gains are negative, so everything goes through the queue. Vertex 2
  // has the unique cheapest move (penalty 1, ids 0/1/4 pay more or tie
  // behind it); moving it flips the sign for its partner 3, whose stale -1
  // key re-verifies to +1 at pop time and the pair {2,3} ends up whole.
  std::vector<size_t> offsets{0, 2, 4, 6};
  std::vector<VertexID> pins{0, 1, 0, 4, 2, 3};
  const Hypergraph hg = Hypergraph::build(6, offsets, pins, {2, 1, 1}, {});
  TaskPool pool(1);
  pool.execute([&] {
    const std::vector<BlockID> part{0, 0, 0, 0, 0, 1};
    PartitionedHypergraph phg = makePartitioned(hg, 2, part);
    REQUIRE(metrics::connectivityMetric(phg) == 0);
    const RebalanceResult result = rebalance(phg, 0.03, 5);
    CHECK(result.balanced);
    REQUIRE(result.moves.size() == 2);
    CHECK(result.moves[0].u == 2);
    CHECK(result.moves[0].gain == -1);
    CHECK(result.moves[1].u == 3);
    CHECK(result.moves[1].gain == 1);
    CHECK(metrics::connectivityMetric(phg) == 0);
    CHECK(phg.partOf(2) == 1);
    CHECK(phg.partOf(3) == 1);
  });
}

TEST_CASE("an immovable heavy vertex yields failure with residual imbalance") {
  std::vector<size_t> offsets{0, 2};
  std::vector<VertexID> pins{0, 1};
  const Hypergraph hg = Hypergraph::build(2, offsets, pins, {}, {10, 1});
  TaskPool pool(1);
  pool.execute([&] {
    const std::vector<BlockID> part{0, 0};
    PartitionedHypergraph phg = makePartitioned(hg, 2, part);
    const RebalanceResult result = rebalance(phg, 0.03, 1);
    CHECK_FALSE(result.balanced);
    CHECK_FALSE(metrics::isBalanced(phg, 0.03));
    CHECK(result.residual_imbalance ==
          doctest::Approx(metrics::imbalance(phg)));
    // Best effort: the light vertex still escapes, the heavy one cannot.
    CHECK(phg.partOf(0) == 0);
    CHECK(phg.partOf(1) == 1);
  });
}

TEST_CASE("skewed random partitions are rebalanced with exact accounting") {
  Rng rng(0xBA1A);
  for (int inst = 0; inst < 10; ++inst) {
    CAPTURE(inst);
    const Hypergraph hg =
        randomHypergraph(rng, 120 + rng.next() % 60, 200, 6, false);
    const VertexID n = hg.numVertices();
    const BlockID k = 2 + static_cast<BlockID>(rng.next() % 3);
    // Cram roughly two thirds of the vertices into block 0.
    std::vector<BlockID> part(n);
    for (VertexID u = 0; u < n; ++u) {
      part[u] = (rng.next() % 3 != 0)
                    ? 0
                    : static_cast<BlockID>(rng.next() % k);
    }
    for (const int threads : {1, 4}) {
      CAPTURE(threads);
      TaskPool pool(threads);
      pool.execute([&] {
        PartitionedHypergraph phg = makePartitioned(hg, k, part);
        const Gain before = metrics::connectivityMetric(phg);
        const RebalanceResult result = rebalance(phg, 0.03, 1000 + inst);
        CHECK(result.balanced);
        CHECK(metrics::isBalanced(phg, 0.03));

        Gain applied = 0;
        std::vector<BlockID> replay = part;
        for (const Move& m : result.moves) {
          CHECK(replay[m.u] == m.from);
          replay[m.u] = m.to;
          applied += m.gain;
        }
        CHECK(metrics::connectivityMetric(phg) == before - applied);
        const std::vector<BlockID> after = phg.extractPartition();
        CHECK(replay == after);
        REQUIRE(phg.verifyBookkeeping());
      });
    }
  }
}

TEST_CASE("single-thread rebalancing is deterministic") {
  Rng rng(0xD3);
  const Hypergraph hg = randomHypergraph(rng, 150, 260, 5, true);
  const VertexID n = hg.numVertices();
  std::vector<BlockID> part(n, 0);
  for (VertexID u = 0; u < n; ++u) {
    if (rng.next() % 4 == 0) {
      part[u] = static_cast<BlockID>(1 + rng.next() % 2);
    }
  }
  TaskPool pool(1);
  std::vector<BlockID> first_parts;
  std::vector<Move> first_moves;
  for (int run = 0; run < 2; ++run) {
    pool.execute([&] {
      PartitionedHypergraph phg = makePartitioned(hg, 3, part);
      const RebalanceResult result = rebalance(phg, 0.05, 42);
      CHECK(result.balanced);
      if (run == 0) {
        first_parts = phg.extractPartition();
        first_moves = result.moves;
      } else {
        CHECK(first_parts == phg.extractPartition());
        REQUIRE(first_moves.size() == result.moves.size());
        for (size_t i = 0; i < first_moves.size(); ++i) {
          CHECK(first_moves[i].u == result.moves[i].u);
          CHECK(first_moves[i].to == result.moves[i].to);
          CHECK(first_moves[i].gain == result.moves[i].gain);
        }
      }
    });
  }
}

}  // namespace hyperpart
