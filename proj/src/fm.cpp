#include "hyperpart/fm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <optional>
#include <unordered_map>
#include <vector>

#include <tbb/concurrent_queue.h>
#include <tbb/concurrent_vector.h>
#include <tbb/enumerable_thread_specific.h>

#include "hyperpart/addressable_pq.hpp"
#include "hyperpart/gain_recalculation.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

namespace {

// Partition and pin-count changes of one local-apply search, invisible to
// other threads until the kept prefix is committed. Deltas live in one
// vector per touched net; the epoch array answers "untouched?" with a plain
// load so the common case never pays a hash lookup.
struct DeltaOverlay {
  std::unordered_map<VertexID, BlockID> part;
  std::unordered_map<NetID, std::vector<int32_t>> phi;
  std::vector<Weight> block_delta;
  std::vector<uint32_t> net_epoch;
  uint32_t epoch = 0;

  void reset(BlockID k, NetID num_nets) {
    part.clear();
    phi.clear();
    block_delta.assign(k, 0);
    if (net_epoch.size() < num_nets) {
      net_epoch.resize(num_nets, 0);
    }
    ++epoch;
  }

  bool touched(NetID e) const { return net_epoch[e] == epoch; }

  const std::vector<int32_t>& deltasOf(NetID e) const {
    return phi.find(e)->second;
  }

  BlockID partOf(const PartitionedHypergraph& phg, VertexID u) const {
    const auto it = part.find(u);
    return it != part.end() ? it->second : phg.partOf(u);
  }

  int32_t pinCount(const PartitionedHypergraph& phg, NetID e, BlockID b) const {
    if (!touched(e)) {
      return phg.pinCountInBlock(e, b);
    }
    return phg.pinCountInBlock(e, b) + deltasOf(e)[b];
  }

  Weight blockWeight(const PartitionedHypergraph& phg, BlockID b) const {
    return phg.blockWeight(b) + block_delta[b];
  }

  void apply(const PartitionedHypergraph& phg, VertexID u, BlockID from,
             BlockID to) {
    part[u] = to;
    const size_t k = block_delta.size();
    for (const NetID e : phg.hypergraph().incidentNets(u)) {
      std::vector<int32_t>& deltas = phi[e];
      if (!touched(e)) {
        deltas.assign(k, 0);
        net_epoch[e] = epoch;
      }
      --deltas[from];
      ++deltas[to];
    }
    const Weight w = phg.hypergraph().vertexWeight(u);
    block_delta[from] -= w;
    block_delta[to] += w;
  }

  size_t memoryBytes() const {
    // Conservative per-node estimate for the hash maps and delta vectors.
    return part.size() * 64 +
           phi.size() * (64 + block_delta.size() * sizeof(int32_t));
  }
};

struct LogEntry {
  Move move;
  // 0 = unset, 1 = applied, 2 = reverted by its search.
  AtomicWrapper<uint8_t> state;
};

struct SharedRound {
  std::vector<AtomicWrapper<uint8_t>> owner;
  std::vector<AtomicWrapper<uint8_t>> polled_while_owned;
  std::vector<std::vector<VertexID>> queues;
  std::vector<AtomicWrapper<size_t>> cursors;
  tbb::concurrent_queue<VertexID> reinsertion;
  std::atomic<int> threads_done{0};
  std::atomic<uint32_t> next_move_id{0};
  tbb::concurrent_vector<LogEntry> log;

  explicit SharedRound(VertexID n, int p)
      : owner(n), polled_while_owned(n), queues(p), cursors(p) {}

  bool tryAcquire(VertexID v) {
    uint8_t expected = 0;
    return owner[v].compare_exchange_strong(expected, 1,
                                            std::memory_order_acq_rel);
  }
  void release(VertexID v) { owner[v].store(0, std::memory_order_release); }
};

struct BestMove {
  BlockID to = kInvalidBlock;
  Gain gain = 0;
};

struct SearchContext {
  AddressablePQ pq;
  DeltaOverlay overlay;
  std::vector<uint8_t> moved_flag;
  std::vector<VertexID> moved;
  std::vector<VertexID> touched_owned;
  std::vector<Move> log;
  std::vector<uint32_t> move_ids;  // global mode only, parallel to `log`
  std::vector<Gain> connect;

  void ensure(VertexID n, BlockID k) {
    pq.resize(n);
    if (moved_flag.size() < n) {
      moved_flag.assign(n, 0);
    }
    if (connect.size() < static_cast<size_t>(k)) {
      connect.assign(k, 0);
    }
  }
};

// Highest-gain feasible move of v read from the coherent global cache;
// ties prefer the lighter block, then the lower id.
BestMove bestMoveGlobal(const PartitionedHypergraph& phg, const GainCache& cache,
                        VertexID v, Weight limit) {
  const BlockID from = phg.partOf(v);
  const Weight w_v = phg.hypergraph().vertexWeight(v);
  const Gain benefit = cache.benefit(v);
  BestMove best;
  Weight best_weight = 0;
  for (BlockID b = 0; b < phg.k(); ++b) {
    if (b == from) {
      continue;
    }
    const Weight target_weight = phg.blockWeight(b);
    if (target_weight + w_v > limit) {
      continue;
    }
    const Gain gain = benefit - cache.penalty(v, b);
    if (best.to == kInvalidBlock || gain > best.gain ||
        (gain == best.gain &&
         (target_weight < best_weight ||
          (target_weight == best_weight && b < best.to)))) {
      best = {b, gain};
      best_weight = target_weight;
    }
  }
  return best;
}

// Same selection evaluated on the search's private overlay. Nets the search
// has not touched read the shared connectivity set directly, so their cost
// is the number of present blocks rather than k hash probes.
BestMove bestMoveLocal(const PartitionedHypergraph& phg, SearchContext& ctx,
                       VertexID v, Weight limit) {
  const Hypergraph& hg = phg.hypergraph();
  const BlockID k = phg.k();
  const BlockID from = ctx.overlay.partOf(phg, v);
  const Weight w_v = hg.vertexWeight(v);

  Gain benefit = 0;
  Gain incident_weight = 0;
  for (const NetID e : hg.incidentNets(v)) {
    const Gain w_e = hg.netWeight(e);
    incident_weight += w_e;
    if (!ctx.overlay.touched(e)) {
      if (phg.pinCountInBlock(e, from) == 1) {
        benefit += w_e;
      }
      phg.forBlocksOf(e, [&](BlockID b) {
        if (b != from) {
          ctx.connect[b] += w_e;
        }
      });
      continue;
    }
    const std::vector<int32_t>& deltas = ctx.overlay.deltasOf(e);
    for (BlockID b = 0; b < k; ++b) {
      const int32_t cnt = phg.pinCountInBlock(e, b) + deltas[b];
      if (b == from) {
        benefit += cnt == 1 ? w_e : 0;
      } else if (cnt > 0) {
        ctx.connect[b] += w_e;
      }
    }
  }

  BestMove best;
  Weight best_weight = 0;
  for (BlockID b = 0; b < k; ++b) {
    const Gain connected = ctx.connect[b];
    ctx.connect[b] = 0;
    if (b == from) {
      continue;
    }
    const Weight target_weight = ctx.overlay.blockWeight(phg, b);
    if (target_weight + w_v > limit) {
      continue;
    }
    const Gain gain = benefit - (incident_weight - connected);
    if (best.to == kInvalidBlock || gain > best.gain ||
        (gain == best.gain &&
         (target_weight < best_weight ||
          (target_weight == best_weight && b < best.to)))) {
      best = {b, gain};
      best_weight = target_weight;
    }
  }
  return best;
}

BestMove bestMoveFor(const PartitionedHypergraph& phg, const GainCache& cache,
                     SearchContext& ctx, VertexID v, Weight limit,
                     bool local_mode) {
  return local_mode ? bestMoveLocal(phg, ctx, v, limit)
                    : bestMoveGlobal(phg, cache, v, limit);
}

std::optional<VertexID> pollTask(SharedRound& shared, int slot) {
  const int p = static_cast<int>(shared.queues.size());
  for (int offset = 0; offset < p; ++offset) {
    // Own vector first, then stealing in slot order; the reinsertion queue
    // is consulted between the two.
    if (offset == 1) {
      VertexID v = kInvalidVertex;
      if (shared.reinsertion.try_pop(v)) {
        return v;
      }
    }
    const int t = (slot + offset) % p;
    const std::vector<VertexID>& queue = shared.queues[t];
    while (true) {
      const size_t idx = shared.cursors[t].fetch_add(1, std::memory_order_relaxed);
      if (idx >= queue.size()) {
        break;
      }
      return queue[idx];
    }
  }
  VertexID v = kInvalidVertex;
  if (shared.reinsertion.try_pop(v)) {
    return v;
  }
  return std::nullopt;
}

struct SearchParams {
  Weight limit = 0;
  int seeds_per_search = 25;
  int poll_threshold = 1;
  double stop_alpha = 1.0;
  int stop_min_moves = 8;
  bool release_vertices = true;
};

// One localized search. Returns false when seeding found no work at all.
bool runSearch(PartitionedHypergraph& phg, GainCache& cache,
               SharedRound& shared, SearchContext& ctx, int slot,
               const SearchParams& params, std::atomic<bool>& local_mode_flag,
               size_t overlay_budget) {
  const Hypergraph& hg = phg.hypergraph();
  const bool local_mode = local_mode_flag.load(std::memory_order_relaxed);
  ctx.ensure(hg.numVertices(), phg.k());
  if (local_mode) {
    ctx.overlay.reset(phg.k(), hg.numNets());
  }
  ctx.pq.clear();
  ctx.moved.clear();
  ctx.touched_owned.clear();
  ctx.log.clear();
  ctx.move_ids.clear();

  int seeds = 0;
  while (seeds < params.seeds_per_search) {
    const std::optional<VertexID> polled = pollTask(shared, slot);
    if (!polled.has_value()) {
      break;
    }
    const VertexID v = *polled;
    if (!shared.tryAcquire(v)) {
      shared.polled_while_owned[v].store(1, std::memory_order_relaxed);
      continue;
    }
    if (!phg.isBorderVertex(v)) {
      shared.release(v);
      continue;
    }
    ctx.touched_owned.push_back(v);
    ctx.pq.insert(v,
                  bestMoveFor(phg, cache, ctx, v, params.limit, local_mode).gain);
    ++seeds;
  }
  if (seeds == 0) {
    return false;
  }

  // Adaptive stop statistics over the gains observed since the last local
  // best prefix.
  Gain cumulative = 0;
  Gain best_cumulative = 0;
  size_t best_len = 0;
  size_t s = 0;
  double gain_sum = 0.0;
  double gain_sumsq = 0.0;

  while (!ctx.pq.empty()) {
    if (shared.threads_done.load(std::memory_order_relaxed) >=
        params.poll_threshold) {
      break;
    }
    const AddressablePQ::Top top = ctx.pq.deleteMax();
    const VertexID v = top.vertex;
    const BestMove best = bestMoveFor(phg, cache, ctx, v, params.limit, local_mode);
    if (best.to == kInvalidBlock) {
      continue;  // no feasible target; v stays owned until release
    }
    if (best.gain < top.key) {
      ctx.pq.insert(v, best.gain);  // stale key, try again in order
      continue;
    }

    const BlockID from =
        local_mode ? ctx.overlay.partOf(phg, v) : phg.partOf(v);
    Gain realized = best.gain;
    if (local_mode) {
      ctx.overlay.apply(phg, v, from, best.to);
    } else {
      const std::optional<Gain> attributed =
          phg.tryMove(v, best.to, params.limit, &cache);
      if (!attributed.has_value()) {
        continue;  // lost the reservation race; v stays owned, unmoved
      }
      realized = *attributed;
      const uint32_t id =
          shared.next_move_id.fetch_add(1, std::memory_order_relaxed);
      shared.log.grow_to_at_least(id + 1);
      shared.log[id].move = {v, from, best.to, 0};
      shared.log[id].state.store(1, std::memory_order_release);
      ctx.move_ids.push_back(id);
    }
    ctx.log.push_back({v, from, best.to, 0});
    ctx.moved_flag[v] = 1;
    ctx.moved.push_back(v);

    cumulative += realized;
    if (cumulative > best_cumulative) {
      best_cumulative = cumulative;
      best_len = ctx.log.size();
      s = 0;
      gain_sum = 0.0;
      gain_sumsq = 0.0;
    } else {
      ++s;
      gain_sum += static_cast<double>(realized);
      gain_sumsq += static_cast<double>(realized) * static_cast<double>(realized);
      if (s >= static_cast<size_t>(params.stop_min_moves)) {
        const double mu = gain_sum / static_cast<double>(s);
        const double var = gain_sumsq / static_cast<double>(s) - mu * mu;
        if (static_cast<double>(s) * mu * mu > params.stop_alpha * var) {
          break;
        }
      }
    }

    // Pull unowned, unmoved neighbors into the search and refresh the keys
    // of the ones already here. Neighbor gains only change when the move
    // crossed a pin-count threshold: source count now in {0,1} or target
    // count now in {1,2}; every other net keeps its pins' gains. Tracked
    // pins get an optimistic O(1) bump instead of a recomputation: keys may
    // sit above the true gain, never below, and the pop re-validates.
    for (const NetID e : hg.incidentNets(v)) {
      int32_t cnt_from = phg.pinCountInBlock(e, from);
      int32_t cnt_to = phg.pinCountInBlock(e, best.to);
      if (local_mode) {
        const std::vector<int32_t>& deltas = ctx.overlay.deltasOf(e);
        cnt_from += deltas[from];
        cnt_to += deltas[best.to];
      }
      if (cnt_from > 1 && cnt_to > 2) {
        continue;
      }
      const Gain w_e = hg.netWeight(e);
      for (const VertexID p : hg.pins(e)) {
        if (p == v || ctx.moved_flag[p] != 0) {
          continue;
        }
        if (ctx.pq.contains(p)) {
          const BlockID p_block =
              local_mode ? ctx.overlay.partOf(phg, p) : phg.partOf(p);
          // Benefit rises lift every target at once; a vanished source side
          // or a fresh target side lifts single targets. Their sum bounds
          // the rise of the best gain.
          const Gain bump =
              w_e * ((cnt_from == 1 && p_block == from ? 1 : 0) +
                     ((cnt_from == 0 && p_block != from) ||
                              (cnt_to == 1 && p_block != best.to)
                          ? 1
                          : 0));
          if (bump != 0) {
            ctx.pq.insertOrAdjust(p, ctx.pq.keyOf(p) + bump);
          }
        } else if (shared.tryAcquire(p)) {
          ctx.touched_owned.push_back(p);
          ctx.pq.insert(
              p, bestMoveFor(phg, cache, ctx, p, params.limit, local_mode).gain);
        }
      }
    }
  }

  if (local_mode) {
    // Only the best prefix exists outside the overlay: commit it move by
    // move under real weight reservations.
    for (size_t i = 0; i < best_len; ++i) {
      Move& m = ctx.log[i];
      const std::optional<Gain> attributed =
          phg.tryMove(m.u, m.to, params.limit, &cache);
      if (!attributed.has_value()) {
        ctx.moved_flag[m.u] = 0;  // commit lost its room; leave m.u unmoved
        continue;
      }
      const uint32_t id =
          shared.next_move_id.fetch_add(1, std::memory_order_relaxed);
      shared.log.grow_to_at_least(id + 1);
      shared.log[id].move = {m.u, m.from, m.to, 0};
      shared.log[id].state.store(1, std::memory_order_release);
    }
    for (size_t i = best_len; i < ctx.log.size(); ++i) {
      ctx.moved_flag[ctx.log[i].u] = 0;
    }
    if (ctx.overlay.memoryBytes() > overlay_budget) {
      local_mode_flag.store(false, std::memory_order_relaxed);
    }
  } else {
    // Undo everything past the best prefix on the shared partition and
    // drop those entries from the global sequence.
    for (size_t i = ctx.log.size(); i-- > best_len;) {
      const Move& m = ctx.log[i];
      phg.applyMoveUnchecked(m.u, m.from, &cache);
      shared.log[ctx.move_ids[i]].state.store(2, std::memory_order_release);
      ctx.moved_flag[m.u] = 0;
    }
  }

  if (!ctx.moved.empty()) {
    // Benefits of vertices that moved (or moved and reverted) cannot be
    // patched by the delta rules; restore them from the current counts.
    cache.recomputeBenefits(phg, ctx.moved);
  }

  for (const VertexID v : ctx.touched_owned) {
    if (ctx.moved_flag[v] != 0) {
      continue;  // kept moves stay locked for the rest of the round
    }
    if (params.release_vertices) {
      if (shared.polled_while_owned[v].exchange(0, std::memory_order_relaxed) !=
          0) {
        shared.reinsertion.push(v);
      }
      shared.release(v);
    }
  }
  for (const VertexID v : ctx.moved) {
    ctx.moved_flag[v] = 0;
  }
  return true;
}

struct RoundResult {
  Gain improvement = 0;
  size_t kept_moves = 0;
  size_t total_moves = 0;
};

RoundResult fmRound(PartitionedHypergraph& phg, GainCache& cache,
                    GainRecalculator& recalculator,
                    const PartitionConfig& config, uint64_t round_seed,
                    std::atomic<bool>& local_mode_flag, bool degraded,
                    tbb::enumerable_thread_specific<SearchContext>& tls_ctx) {
  const Hypergraph& hg = phg.hypergraph();
  const VertexID n = hg.numVertices();
  const BlockID k = phg.k();
  const int p = std::max(1, config.num_threads);
  const Weight limit = metrics::maxBlockWeight(
      hg.totalWeight(), k, config.epsilon * config.fm_rollback_epsilon_factor);

  SharedRound shared(n, p);

  // Boundary vertices, split across the per-thread queues, each shuffled on
  // its own stream.
  tbb::enumerable_thread_specific<std::vector<VertexID>> tls_boundary;
  parallelFor(VertexID{0}, n, [&](VertexID u) {
    if (phg.isBorderVertex(u)) {
      tls_boundary.local().push_back(u);
    }
  });
  std::vector<VertexID> boundary;
  for (const auto& local : tls_boundary) {
    boundary.insert(boundary.end(), local.begin(), local.end());
  }
  if (boundary.empty()) {
    return {};
  }
  const size_t chunk = (boundary.size() + p - 1) / p;
  for (int t = 0; t < p; ++t) {
    const size_t begin = std::min(boundary.size(), t * chunk);
    const size_t end = std::min(boundary.size(), begin + chunk);
    shared.queues[t].assign(boundary.begin() + begin, boundary.begin() + end);
    Rng rng = derivedRng(round_seed, t, 3);
    rng.shuffle(shared.queues[t]);
  }

  std::vector<Weight> start_weights(k);
  for (BlockID b = 0; b < k; ++b) {
    start_weights[b] = phg.blockWeight(b);
  }

  SearchParams params;
  params.limit = limit;
  params.seeds_per_search = config.fm_seeds_per_search;
  params.poll_threshold = std::max(1, p / 2);
  params.stop_alpha = config.fm_stop_alpha;
  params.stop_min_moves = config.fm_stop_min_moves;
  params.release_vertices = !degraded;
  if (degraded) {
    local_mode_flag.store(false, std::memory_order_relaxed);
  }

  parallelFor(0, p, [&](int slot) {
    SearchContext& ctx = tls_ctx.local();
    while (runSearch(phg, cache, shared, ctx, slot, params, local_mode_flag,
                     config.fm_overlay_budget_per_thread)) {
    }
    shared.threads_done.fetch_add(1, std::memory_order_relaxed);
  }, 1);

  const uint32_t total = shared.next_move_id.load();
  MoveSequence sequence;
  sequence.reserve(total);
  for (uint32_t id = 0; id < total; ++id) {
    if (shared.log[id].state.load(std::memory_order_acquire) == 1) {
      sequence.push_back(shared.log[id].move);
    }
  }
  RoundResult result;
  result.total_moves = sequence.size();
  if (sequence.empty()) {
    parallelFor(VertexID{0}, n, [&](VertexID u) {
      shared.owner[u].store(0, std::memory_order_relaxed);
    });
    return result;
  }

  // Exact sequential-order gains, then the best balanced prefix; everything
  // behind it is undone.
  recalculator.recalculateGains(phg, PinCountsState::kRoundEnd, sequence);
  const PrefixResult prefix =
      bestBalancedPrefix(hg, sequence, start_weights, limit);
  parallelFor(prefix.length, sequence.size(), [&](size_t i) {
    phg.applyMoveUnchecked(sequence[i].u, sequence[i].from, &cache);
  });
  std::vector<VertexID> sequence_vertices(sequence.size());
  for (size_t i = 0; i < sequence.size(); ++i) {
    sequence_vertices[i] = sequence[i].u;
  }
  cache.recomputeBenefits(phg, sequence_vertices);

  result.improvement = prefix.gain;
  result.kept_moves = prefix.length;
  return result;
}

}  // namespace

Gain fmRefine(PartitionedHypergraph& phg, GainCache& cache,
              const PartitionConfig& config, uint64_t seed,
              double coarsening_seconds) {
  if (phg.k() <= 1 || phg.hypergraph().numVertices() == 0) {
    return 0;
  }
  HP_ASSERT(cache.isInitialized());
  GainRecalculator recalculator(config.recalc_dense_budget);
  std::atomic<bool> local_mode{config.fm_local_apply};
  tbb::enumerable_thread_specific<SearchContext> tls_ctx;

  const auto start = std::chrono::steady_clock::now();
  const double budget_seconds =
      coarsening_seconds >= 0.0
          ? config.fm_time_budget_factor * coarsening_seconds
          : -1.0;

  Gain total = 0;
  Gain metric = metrics::connectivityMetric(phg);
  bool degraded = false;
  for (int round = 0; round < config.fm_max_rounds; ++round) {
    const RoundResult result =
        fmRound(phg, cache, recalculator, config, hashPair(seed, round),
                local_mode, degraded, tls_ctx);
    total += result.improvement;
    metric -= result.improvement;
    if (result.improvement <= 0 ||
        static_cast<double>(result.improvement) <
            config.fm_min_improvement *
                static_cast<double>(metric + result.improvement)) {
      break;
    }
    if (!degraded && budget_seconds >= 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      if (elapsed > budget_seconds) {
        degraded = true;
      }
    }
  }
  return total;
}

}  // namespace hyperpart
