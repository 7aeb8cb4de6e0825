#include "hyperpart/partitioner.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hyperpart/assertions.hpp"
#include "hyperpart/coarsening.hpp"
#include "hyperpart/community.hpp"
#include "hyperpart/fm.hpp"
#include "hyperpart/gain_cache.hpp"
#include "hyperpart/initial_partitioning.hpp"
#include "hyperpart/label_propagation.hpp"
#include "hyperpart/memory_pool.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"
#include "hyperpart/rebalance.hpp"

namespace hyperpart {

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Phase ids for seed derivation; every phase draws an independent stream
// from the one user-facing seed.
enum : uint64_t {
  kSeedInitialPartitioning = 1,
  kSeedRebalance = 2,
  kSeedLpBase = 0x100000,
  kSeedFmBase = 0x200000,
};

// The opt-in bookkeeping check must report in every build mode, so it
// throws instead of asserting.
void verifyOrThrow(const PartitionedHypergraph& phg) {
  std::string what;
  if (!phg.verifyBookkeeping(&what)) {
    throw std::logic_error("bookkeeping check failed: " + what);
  }
}

}  // namespace

double RunStats::maxPhaseSeconds() const {
  return std::max({community_seconds, coarsening_seconds,
                   initial_partitioning_seconds, lp_seconds, fm_seconds,
                   rebalance_seconds});
}

size_t poolEstimateBytes(VertexID num_vertices, NetID num_nets, size_t num_pins,
                         BlockID k) {
  const auto align = [](size_t bytes) { return (bytes + 63) & ~size_t{63}; };
  const size_t n = num_vertices;
  const size_t blocks = std::max<BlockID>(k, 1);
  const size_t gain_cache =
      align(n * sizeof(Gain)) + align(n * blocks * sizeof(Gain));
  const size_t pin_scratch = align(size_t{num_nets} * sizeof(int32_t)) +
                             align(num_pins * sizeof(int32_t));
  return gain_cache + pin_scratch + 4096;
}

PartitionResult partition(const Hypergraph& hg, const PartitionConfig& config) {
  const auto run_start = Clock::now();
  const VertexID n = hg.numVertices();
  const BlockID k = config.k;
  if (k < 1) {
    throw std::invalid_argument("partition: k must be at least 1");
  }
  if (static_cast<VertexID>(k) > n) {
    throw std::runtime_error("partition: k exceeds the number of vertices");
  }

  RunStats stats;
  stats.k = k;
  stats.epsilon = config.epsilon;
  stats.seed = config.seed;
  stats.num_threads = std::max(1, config.num_threads);
  stats.levels.push_back({n, hg.numNets()});

  std::vector<BlockID> part(n, 0);
  MemoryPool pool;
  MemoryPool* pool_ptr = nullptr;
  if (config.memory_pool_enabled) {
    const size_t bytes = config.memory_pool_bytes != 0
                             ? config.memory_pool_bytes
                             : poolEstimateBytes(n, hg.numNets(), hg.numPins(), k);
    pool.reserve(bytes);
    pool_ptr = &pool;
  }

  TaskPool workers(stats.num_threads);
  workers.execute([&] {
    if (k == 1) {
      return;  // single block, nothing to decide
    }

    auto phase_start = Clock::now();
    std::vector<CommunityID> communities(n, 0);
    if (config.use_community_detection) {
      communities = detectCommunities(hg, config).vertex_community;
    }
    stats.community_seconds = secondsSince(phase_start);

    phase_start = Clock::now();
    CoarseningHierarchy hierarchy = coarsen(hg, communities, config);
    stats.coarsening_seconds = secondsSince(phase_start);
    for (const CoarseningLevel& level : hierarchy.levels) {
      stats.levels.push_back({level.hg.numVertices(), level.hg.numNets()});
    }

    // Communities follow the hierarchy down: clusters never cross community
    // boundaries, so any constituent's community is the cluster's.
    std::vector<CommunityID> coarse_communities = communities;
    for (const CoarseningLevel& level : hierarchy.levels) {
      std::vector<CommunityID> next(level.hg.numVertices());
      for (VertexID v = 0; v < level.fine_to_coarse.size(); ++v) {
        next[level.fine_to_coarse[v]] = coarse_communities[v];
      }
      coarse_communities = std::move(next);
    }

    phase_start = Clock::now();
    const Hypergraph& coarsest = hierarchy.coarsest(hg);
    Gain current_metric;
    {
      PartitionedHypergraph coarse_phg = recursiveBipartition(
          coarsest, k, config, coarse_communities,
          hashPair(config.seed, kSeedInitialPartitioning));
      current_metric = metrics::connectivityMetric(coarse_phg);
      part = coarse_phg.extractPartition();
    }
    stats.initial_partitioning_seconds = secondsSince(phase_start);

    for (size_t li = hierarchy.levels.size(); li-- > 0;) {
      const Hypergraph& finer = li == 0 ? hg : hierarchy.levels[li - 1].hg;
      const std::vector<VertexID>& map = hierarchy.levels[li].fine_to_coarse;
      std::vector<BlockID> fine_part(finer.numVertices());
      parallelFor(size_t{0}, fine_part.size(),
                  [&](size_t v) { fine_part[v] = part[map[v]]; });

      PartitionedHypergraph level_phg(finer, k);
      level_phg.assignPartition(fine_part);

      LevelRefinementStats level_stats;
      level_stats.projected = metrics::connectivityMetric(level_phg);
      HP_ASSERT(level_stats.projected == current_metric,
                "projection must preserve the metric");

      if (config.use_lp) {
        phase_start = Clock::now();
        lpRefine(level_phg, config,
                 hashPair(config.seed, kSeedLpBase + li));
        stats.lp_seconds += secondsSince(phase_start);
      }
      level_stats.after_lp = metrics::connectivityMetric(level_phg);

      if (config.use_fm) {
        phase_start = Clock::now();
        {
          GainCache cache;
          cache.initialize(level_phg, pool_ptr);
          fmRefine(level_phg, cache, config,
                   hashPair(config.seed, kSeedFmBase + li),
                   stats.coarsening_seconds);
        }
        if (pool_ptr != nullptr) {
          pool_ptr->resetPhase();
        }
        stats.fm_seconds += secondsSince(phase_start);
      }
      level_stats.after_fm = metrics::connectivityMetric(level_phg);
      if (config.check_bookkeeping) {
        verifyOrThrow(level_phg);
      }
      stats.refinement.push_back(level_stats);
      current_metric = level_stats.after_fm;
      part = level_phg.extractPartition();
    }
  });

  PartitionedHypergraph phg(hg, k);
  workers.execute([&] {
    phg.assignPartition(part);
    if (k > 1) {
      const auto phase_start = Clock::now();
      rebalance(phg, config.epsilon, hashPair(config.seed, kSeedRebalance));
      stats.rebalance_seconds = secondsSince(phase_start);
    }
    if (config.check_bookkeeping) {
      verifyOrThrow(phg);
    }
  });

  stats.metric = metrics::connectivityMetric(phg);
  stats.imbalance = metrics::imbalance(phg);
  stats.balanced = metrics::isBalanced(phg, config.epsilon);
  if (pool_ptr != nullptr) {
    stats.pool_reserved_bytes = pool.reservedBytes();
    stats.pool_high_water = pool.highWater();
    stats.pool_fallbacks = pool.fallbackCount();
  }
  stats.total_seconds = secondsSince(run_start);
  HP_ASSERT(stats.total_seconds >= stats.maxPhaseSeconds() - 1e-6);
  return PartitionResult{std::move(phg), std::move(stats)};
}

}  // namespace hyperpart
