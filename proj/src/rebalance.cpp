#include "hyperpart/rebalance.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_sort.h>
#include <tbb/task_arena.h>

#include "hyperpart/assertions.hpp"
#include "hyperpart/block_shuffle.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

namespace {

// Half of the representable range so the reservation's addition cannot
// overflow; used only for reverts, which restore a previous weight anyway.
constexpr Weight kUnbounded = std::numeric_limits<Weight>::max() / 2;

struct GainScratch {
  std::vector<Gain> connect;
  std::vector<BlockID> touched;

  void ensure(BlockID k) {
    if (connect.size() < static_cast<size_t>(k)) {
      connect.assign(k, 0);
    }
  }
};

struct Candidate {
  BlockID block = kInvalidBlock;
  Gain gain = 0;
  Weight weight = 0;
};

// Best move of u into any block with headroom, including blocks u has no pin
// in (their gain is the full incident weight lost). Ties prefer the lighter
// target, then the lower id.
Candidate bestTarget(const PartitionedHypergraph& phg, GainScratch& scratch,
                     VertexID u, BlockID from, Weight limit) {
  const Hypergraph& hg = phg.hypergraph();
  const BlockID k = phg.k();
  const Weight w_u = hg.vertexWeight(u);
  scratch.ensure(k);

  Gain removal_benefit = 0;
  Gain incident_weight = 0;
  for (const NetID e : hg.incidentNets(u)) {
    const Gain w_e = hg.netWeight(e);
    incident_weight += w_e;
    if (phg.pinCountInBlock(e, from) == 1) {
      removal_benefit += w_e;
    }
    phg.forBlocksOf(e, [&](BlockID b) {
      if (b != from) {
        if (scratch.connect[b] == 0) {
          scratch.touched.push_back(b);
        }
        scratch.connect[b] += w_e;
      }
    });
  }

  Candidate best;
  for (BlockID b = 0; b < k; ++b) {
    if (b == from) {
      continue;
    }
    const Weight target_weight = phg.blockWeight(b);
    if (target_weight + w_u > limit) {
      continue;
    }
    const Gain gain =
        removal_benefit - (incident_weight - scratch.connect[b]);
    if (best.block == kInvalidBlock || gain > best.gain ||
        (gain == best.gain &&
         (target_weight < best.weight ||
          (target_weight == best.weight && b < best.block)))) {
      best = {b, gain, target_weight};
    }
  }
  for (const BlockID b : scratch.touched) {
    scratch.connect[b] = 0;
  }
  scratch.touched.clear();
  return best;
}

struct QueueEntry {
  Gain key = 0;
  VertexID u = kInvalidVertex;
};

struct QueueLess {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    return a.key < b.key || (a.key == b.key && a.u > b.u);
  }
};

}  // namespace

RebalanceResult rebalance(PartitionedHypergraph& phg, double epsilon,
                          uint64_t seed) {
  const Hypergraph& hg = phg.hypergraph();
  const VertexID n = hg.numVertices();
  const BlockID k = phg.k();
  const Weight limit = metrics::maxBlockWeight(hg.totalWeight(), k, epsilon);

  RebalanceResult result;
  auto finish = [&] {
    result.balanced = metrics::isBalanced(phg, epsilon);
    result.residual_imbalance = metrics::imbalance(phg);
    return result;
  };
  if (n == 0 || k <= 1) {
    return finish();
  }
  const int workers = tbb::this_task_arena::max_concurrency();

  tbb::enumerable_thread_specific<GainScratch> tls_scratch;
  tbb::enumerable_thread_specific<std::vector<VertexID>> tls_candidates;
  tbb::enumerable_thread_specific<std::vector<Move>> tls_moves;
  tbb::enumerable_thread_specific<std::vector<QueueEntry>> tls_queued;

  for (uint64_t iteration = 0;; ++iteration) {
    std::vector<uint8_t> overloaded(k, 0);
    bool any_overloaded = false;
    for (BlockID b = 0; b < k; ++b) {
      if (phg.blockWeight(b) > limit) {
        overloaded[b] = 1;
        any_overloaded = true;
      }
    }
    if (!any_overloaded) {
      break;
    }

    for (auto& local : tls_candidates) {
      local.clear();
    }
    for (auto& local : tls_queued) {
      local.clear();
    }
    parallelFor(VertexID{0}, n, [&](VertexID u) {
      if (overloaded[phg.partOf(u)]) {
        tls_candidates.local().push_back(u);
      }
    });
    std::vector<VertexID> candidates;
    for (const auto& local : tls_candidates) {
      candidates.insert(candidates.end(), local.begin(), local.end());
    }
    tbb::parallel_sort(candidates.begin(), candidates.end());
    blockShuffle(std::span<VertexID>(candidates), hashPair(seed, iteration),
                 workers);

    // Phase 1: free moves out of overloaded blocks are taken on the spot;
    // everything that would cost metric waits for phase 2.
    std::atomic<size_t> progress{0};
    parallelFor(size_t{0}, candidates.size(), [&](size_t i) {
      const VertexID u = candidates[i];
      const BlockID from = phg.partOf(u);
      if (phg.blockWeight(from) <= limit) {
        return;  // block drained by earlier moves
      }
      GainScratch& scratch = tls_scratch.local();
      const Candidate best = bestTarget(phg, scratch, u, from, limit);
      if (best.block == kInvalidBlock) {
        return;  // no headroom anywhere right now
      }
      if (best.gain < 0) {
        tls_queued.local().push_back({best.gain, u});
        return;
      }
      const std::optional<Gain> attributed =
          phg.tryMove(u, best.block, limit);
      if (!attributed.has_value()) {
        tls_queued.local().push_back({best.gain, u});
        return;  // lost the weight reservation race
      }
      tls_moves.local().push_back(Move{u, from, best.block, *attributed});
      if (*attributed < 0) {
        // Concurrent moves broke the computed gain; restore the vertex (the
        // source block is over the limit by definition, so the revert cannot
        // be weight-checked) and let phase 2 reconsider it.
        const std::optional<Gain> back = phg.tryMove(u, from, kUnbounded);
        HP_ASSERT(back.has_value());
        if (back.has_value()) {
          tls_moves.local().push_back(Move{u, best.block, from, *back});
          tls_queued.local().push_back({best.gain, u});
          return;
        }
      }
      progress.fetch_add(1, std::memory_order_relaxed);
    }, 64);

    for (auto& local : tls_moves) {
      result.moves.insert(result.moves.end(), local.begin(), local.end());
      local.clear();
    }

    auto still_overloaded = [&] {
      for (BlockID b = 0; b < k; ++b) {
        if (phg.blockWeight(b) > limit) {
          return true;
        }
      }
      return false;
    };
    if (!still_overloaded()) {
      break;
    }

    // Phase 2: sequential drain of the merged queues, cheapest metric loss
    // first. Keys are stale by construction, so every pop is re-verified
    // from scratch and pushed back if the move got more expensive.
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueLess> queue;
    for (const auto& local : tls_queued) {
      for (const QueueEntry& entry : local) {
        queue.push(entry);
      }
    }
    GainScratch& scratch = tls_scratch.local();
    while (!queue.empty() && still_overloaded()) {
      const QueueEntry entry = queue.top();
      queue.pop();
      const VertexID u = entry.u;
      const BlockID from = phg.partOf(u);
      if (phg.blockWeight(from) <= limit) {
        continue;  // its block was fixed in the meantime
      }
      const Candidate best = bestTarget(phg, scratch, u, from, limit);
      if (best.block == kInvalidBlock) {
        continue;  // headroom never grows within this drain
      }
      if (best.gain < entry.key) {
        queue.push({best.gain, u});
        continue;
      }
      const std::optional<Gain> attributed =
          phg.tryMove(u, best.block, limit);
      HP_ASSERT(attributed.has_value());
      if (attributed.has_value()) {
        result.moves.push_back(Move{u, from, best.block, *attributed});
        progress.fetch_add(1, std::memory_order_relaxed);
      }
    }

    if (!still_overloaded() ||
        progress.load(std::memory_order_relaxed) == 0) {
      break;
    }
  }
  return finish();
}

}  // namespace hyperpart
