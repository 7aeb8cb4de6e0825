#include "hyperpart/label_propagation.hpp"

#include <algorithm>
#include <span>
#include <atomic>
#include <thread>
#include <vector>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_sort.h>

#include "hyperpart/assertions.hpp"
#include "hyperpart/block_shuffle.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

namespace {

// Per-thread accumulator of net weights already connecting u to each block,
// reset by touched list so a vertex visit costs O(degree), not O(k).
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

}  // namespace

Gain lpRefine(PartitionedHypergraph& phg, const PartitionConfig& config,
              uint64_t seed, int max_rounds,
              std::span<const Weight> block_limits) {
  const Hypergraph& hg = phg.hypergraph();
  const VertexID n = hg.numVertices();
  const BlockID k = phg.k();
  if (max_rounds < 0) {
    max_rounds = config.lp_max_rounds;
  }
  if (n == 0 || k <= 1 || max_rounds == 0) {
    return 0;
  }
  HP_ASSERT(block_limits.empty() ||
            block_limits.size() == static_cast<size_t>(k));
  const Weight uniform_limit =
      metrics::maxBlockWeight(hg.totalWeight(), k, config.epsilon);
  auto limit_of = [&](BlockID b) {
    return block_limits.empty() ? uniform_limit : block_limits[b];
  };

  std::vector<AtomicWrapper<uint8_t>> eligible(n);
  std::vector<AtomicWrapper<uint8_t>> eligible_next(n);
  parallelFor(VertexID{0}, n, [&](VertexID u) {
    eligible[u].store(phg.isBorderVertex(u) ? 1 : 0,
                      std::memory_order_relaxed);
  });

  tbb::enumerable_thread_specific<GainScratch> tls_scratch;
  tbb::enumerable_thread_specific<std::vector<VertexID>> tls_active;
  std::atomic<Gain> total_improvement{0};

  for (int round = 0; round < max_rounds; ++round) {
    for (auto& local : tls_active) {
      local.clear();
    }
    parallelFor(VertexID{0}, n, [&](VertexID u) {
      if (eligible[u].load(std::memory_order_relaxed) != 0) {
        tls_active.local().push_back(u);
      }
    });
    std::vector<VertexID> active;
    for (const auto& local : tls_active) {
      active.insert(active.end(), local.begin(), local.end());
    }
    if (active.empty()) {
      break;
    }
    tbb::parallel_sort(active.begin(), active.end());
    blockShuffle(std::span<VertexID>(active), hashPair(seed, round),
                 config.num_threads);

    std::atomic<size_t> moved{0};
    parallelFor(size_t{0}, active.size(), [&](size_t i) {
      const VertexID u = active[i];
      const BlockID from = phg.partOf(u);
      const Weight w_u = hg.vertexWeight(u);
      GainScratch& scratch = tls_scratch.local();
      scratch.ensure(k);

      // gain(u -> j) = removal_benefit - (sum of incident net weights not
      // already connected to j); both terms read off the connectivity sets.
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
      for (const BlockID b : scratch.touched) {
        const Gain gain = removal_benefit -
                          (incident_weight - scratch.connect[b]);
        scratch.connect[b] = 0;
        const Weight target_weight = phg.blockWeight(b);
        if (target_weight + w_u > limit_of(b)) {
          continue;
        }
        // Ties go to the lighter block, then the lower id.
        if (best.block == kInvalidBlock || gain > best.gain ||
            (gain == best.gain &&
             (target_weight < best.weight ||
              (target_weight == best.weight && b < best.block)))) {
          best = {b, gain, target_weight};
        }
      }
      scratch.touched.clear();

      if (best.block == kInvalidBlock) {
        return;
      }
      const bool positive = best.gain > 0;
      const bool balance_move =
          best.gain == 0 && best.weight + w_u < phg.blockWeight(from);
      if (!positive && !balance_move) {
        return;
      }
      const std::optional<Gain> attributed =
          phg.tryMove(u, best.block, limit_of(best.block));
      if (!attributed.has_value()) {
        return;  // lost the weight reservation race
      }
      Gain applied = *attributed;
      if (applied < 0) {
        // Concurrent moves disagreed with the computed gain; undo. The
        // revert is a normal reserved move, so its attributed gain also
        // counts and the telescoping identity survives even if the source
        // block filled up in between and the revert has to stay put.
        for (int attempt = 0; attempt < 3; ++attempt) {
          const std::optional<Gain> back = phg.tryMove(u, from, limit_of(from));
          if (back.has_value()) {
            applied += *back;
            break;
          }
          std::this_thread::yield();
        }
      }
      total_improvement.fetch_add(applied, std::memory_order_relaxed);
      moved.fetch_add(1, std::memory_order_relaxed);
      eligible_next[u].store(1, std::memory_order_relaxed);
      for (const NetID e : hg.incidentNets(u)) {
        for (const VertexID p : hg.pins(e)) {
          eligible_next[p].store(1, std::memory_order_relaxed);
        }
      }
    }, 64);

    std::swap(eligible, eligible_next);
    parallelFor(VertexID{0}, n, [&](VertexID u) {
      eligible_next[u].store(0, std::memory_order_relaxed);
    });
    if (moved.load() == 0) {
      break;
    }
  }
  return total_improvement.load();
}

}  // namespace hyperpart
