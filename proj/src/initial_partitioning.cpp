#include "hyperpart/initial_partitioning.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>
#include <utility>
#include <vector>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_invoke.h>

#include "hyperpart/addressable_pq.hpp"
#include "hyperpart/assertions.hpp"
#include "hyperpart/coarsening.hpp"
#include "hyperpart/label_propagation.hpp"
#include "hyperpart/metrics.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

namespace {

// All two-block bookkeeping hangs off one counter per net: pins on side 0.
// Side 1 pins follow from the net size, a net is cut iff the counter is
// strictly between zero and the size.
struct TwowayCounters {
  std::vector<uint32_t> phi0;
  Weight weight[2] = {0, 0};
  Gain metric = 0;

  void init(const Hypergraph& hg, std::span<const BlockID> part) {
    const NetID m = hg.numNets();
    phi0.assign(m, 0);
    weight[0] = weight[1] = 0;
    metric = 0;
    for (VertexID v = 0; v < hg.numVertices(); ++v) {
      weight[part[v]] += hg.vertexWeight(v);
    }
    for (NetID e = 0; e < m; ++e) {
      uint32_t cnt = 0;
      for (const VertexID p : hg.pins(e)) {
        cnt += part[p] == 0;
      }
      phi0[e] = cnt;
      if (cnt > 0 && cnt < hg.pins(e).size()) {
        metric += hg.netWeight(e);
      }
    }
  }

  bool cut(const Hypergraph& hg, NetID e) const {
    return phi0[e] > 0 && phi0[e] < hg.pins(e).size();
  }

  // Gain of moving u to the opposite side.
  Gain gainOf(const Hypergraph& hg, std::span<const BlockID> part,
              VertexID u) const {
    const BlockID from = part[u];
    Gain gain = 0;
    for (const NetID e : hg.incidentNets(u)) {
      const size_t size = hg.pins(e).size();
      const uint32_t from_pins = from == 0 ? phi0[e] : size - phi0[e];
      if (from_pins == 1) {
        gain += hg.netWeight(e);
      } else if (from_pins == size) {
        gain -= hg.netWeight(e);
      }
    }
    return gain;
  }

  // Flips u to the other side; applying twice restores the state exactly.
  void flip(const Hypergraph& hg, std::vector<BlockID>& part, VertexID u) {
    const BlockID from = part[u];
    for (const NetID e : hg.incidentNets(u)) {
      const bool was_cut = cut(hg, e);
      phi0[e] += from == 0 ? -1 : 1;
      const bool is_cut = cut(hg, e);
      metric += (Gain{is_cut} - Gain{was_cut}) * hg.netWeight(e);
    }
    weight[from] -= hg.vertexWeight(u);
    weight[1 - from] += hg.vertexWeight(u);
    part[u] = 1 - from;
  }
};

bool feasibleWeights(const TwowayCounters& tc, const BipartitionGoals& goals) {
  return tc.weight[0] <= goals.limit0 && tc.weight[1] <= goals.limit1;
}

Weight overloadOf(const TwowayCounters& tc, const BipartitionGoals& goals) {
  return std::max<Weight>(0, tc.weight[0] - goals.limit0) +
         std::max<Weight>(0, tc.weight[1] - goals.limit1);
}

Weight sideLimit(const BipartitionGoals& goals, BlockID side) {
  return side == 0 ? goals.limit0 : goals.limit1;
}

Weight sideTarget(const BipartitionGoals& goals, BlockID side) {
  return side == 0 ? goals.target0 : goals.target1;
}

// If a side ended up empty, pull over the best-gain vertex that fits its
// limit; with two or more vertices a bipartition should use both blocks
// whenever the weights permit.
void repairEmptySide(const Hypergraph& hg, std::vector<BlockID>& part,
                     TwowayCounters& tc, const BipartitionGoals& goals) {
  const VertexID n = hg.numVertices();
  if (n < 2) {
    return;
  }
  for (const BlockID side : {BlockID{0}, BlockID{1}}) {
    VertexID count = 0;
    for (VertexID v = 0; v < n; ++v) {
      count += part[v] == side;
    }
    if (count > 0) {
      continue;
    }
    VertexID best = kInvalidVertex;
    Gain best_gain = 0;
    for (VertexID v = 0; v < n; ++v) {
      if (tc.weight[side] + hg.vertexWeight(v) > sideLimit(goals, side)) {
        continue;
      }
      const Gain gain = tc.gainOf(hg, part, v);
      if (best == kInvalidVertex || gain > best_gain ||
          (gain == best_gain && hg.vertexWeight(v) < hg.vertexWeight(best))) {
        best = v;
        best_gain = gain;
      }
    }
    if (best != kInvalidVertex) {
      tc.flip(hg, part, best);
    }
  }
}

Bipartition finalize(const Hypergraph& hg, std::vector<BlockID> part,
                     const BipartitionGoals& goals) {
  TwowayCounters tc;
  tc.init(hg, part);
  repairEmptySide(hg, part, tc, goals);
  return Bipartition{std::move(part), tc.metric, feasibleWeights(tc, goals)};
}

// Assigns every still-unassigned vertex to the side with more headroom that
// fits its limit, or the one with the smaller overshoot if neither does.
void placeLeftovers(const Hypergraph& hg, std::vector<BlockID>& part,
                    Weight weight[2], const BipartitionGoals& goals) {
  for (VertexID v = 0; v < hg.numVertices(); ++v) {
    if (part[v] != kInvalidBlock) {
      continue;
    }
    const Weight w = hg.vertexWeight(v);
    const Weight head0 = goals.limit0 - (weight[0] + w);
    const Weight head1 = goals.limit1 - (weight[1] + w);
    const BlockID side = head0 >= head1 ? 0 : 1;
    part[v] = side;
    weight[side] += w;
  }
}

// ---- flat algorithms ----

std::vector<BlockID> flatRandom(const Hypergraph& hg,
                                const BipartitionGoals& goals, Rng& rng) {
  const VertexID n = hg.numVertices();
  std::vector<BlockID> part(n, 0);
  Weight weight[2] = {0, 0};
  for (int attempt = 0; attempt < 6; ++attempt) {
    weight[0] = weight[1] = 0;
    for (VertexID v = 0; v < n; ++v) {
      part[v] = rng.nextBool() ? 1 : 0;
      weight[part[v]] += hg.vertexWeight(v);
    }
    if (weight[0] <= goals.limit0 && weight[1] <= goals.limit1) {
      return part;
    }
  }
  // Greedy repair: shift vertices off the overloaded side while they fit.
  std::vector<VertexID> order(n);
  for (VertexID v = 0; v < n; ++v) {
    order[v] = v;
  }
  rng.shuffle(order);
  bool progress = true;
  while (progress &&
         (weight[0] > goals.limit0 || weight[1] > goals.limit1)) {
    progress = false;
    for (const VertexID v : order) {
      const BlockID from = part[v];
      const BlockID to = 1 - from;
      const Weight w = hg.vertexWeight(v);
      if (weight[from] > sideLimit(goals, from) &&
          weight[to] + w <= sideLimit(goals, to)) {
        part[v] = to;
        weight[from] -= w;
        weight[to] += w;
        progress = true;
        if (weight[0] <= goals.limit0 && weight[1] <= goals.limit1) {
          return part;
        }
      }
    }
  }
  return part;
}

// Draws an unseen vertex, preferring random probes, falling back to a scan.
VertexID drawUnseen(const std::vector<uint8_t>& seen, VertexID n, Rng& rng) {
  for (int probe = 0; probe < 32; ++probe) {
    const VertexID v = static_cast<VertexID>(rng.nextBounded(n));
    if (!seen[v]) {
      return v;
    }
  }
  for (VertexID v = 0; v < n; ++v) {
    if (!seen[v]) {
      return v;
    }
  }
  return kInvalidVertex;
}

std::vector<BlockID> flatBfs(const Hypergraph& hg,
                             const BipartitionGoals& goals, Rng& rng) {
  const VertexID n = hg.numVertices();
  std::vector<BlockID> part(n, 1);
  std::vector<uint8_t> seen(n, 0);
  std::deque<VertexID> queue;
  Weight w0 = 0;
  while (w0 < goals.target0) {
    if (queue.empty()) {
      const VertexID fresh = drawUnseen(seen, n, rng);
      if (fresh == kInvalidVertex) {
        break;
      }
      seen[fresh] = 1;
      queue.push_back(fresh);
    }
    const VertexID u = queue.front();
    queue.pop_front();
    if (w0 + hg.vertexWeight(u) > goals.target0) {
      continue;  // too heavy; keep exploring lighter frontier vertices
    }
    part[u] = 0;
    w0 += hg.vertexWeight(u);
    for (const NetID e : hg.incidentNets(u)) {
      for (const VertexID p : hg.pins(e)) {
        if (!seen[p]) {
          seen[p] = 1;
          queue.push_back(p);
        }
      }
    }
  }
  return part;
}

std::vector<BlockID> flatAlternatingBfs(const Hypergraph& hg,
                                        const BipartitionGoals& goals,
                                        Rng& rng) {
  const VertexID n = hg.numVertices();
  std::vector<BlockID> part(n, kInvalidBlock);
  std::vector<uint8_t> seen(n, 0);
  std::deque<VertexID> queue[2];
  Weight weight[2] = {0, 0};
  bool exhausted[2] = {false, false};

  const VertexID s0 = static_cast<VertexID>(rng.nextBounded(n));
  seen[s0] = 1;
  queue[0].push_back(s0);
  if (n > 1) {
    VertexID s1 = drawUnseen(seen, n, rng);
    seen[s1] = 1;
    queue[1].push_back(s1);
  } else {
    exhausted[1] = true;
  }

  BlockID turn = 0;
  while (!exhausted[0] || !exhausted[1]) {
    if (exhausted[turn]) {
      turn = 1 - turn;
      continue;
    }
    if (weight[turn] >= sideTarget(goals, turn)) {
      exhausted[turn] = true;
      continue;
    }
    if (queue[turn].empty()) {
      const VertexID fresh = drawUnseen(seen, n, rng);
      if (fresh == kInvalidVertex) {
        exhausted[turn] = true;
        continue;
      }
      seen[fresh] = 1;
      queue[turn].push_back(fresh);
    }
    const VertexID u = queue[turn].front();
    queue[turn].pop_front();
    if (part[u] != kInvalidBlock) {
      continue;  // claimed by the other front
    }
    if (weight[turn] + hg.vertexWeight(u) > sideTarget(goals, turn)) {
      continue;  // keep the turn, try the next frontier vertex
    }
    part[u] = turn;
    weight[turn] += hg.vertexWeight(u);
    for (const NetID e : hg.incidentNets(u)) {
      for (const VertexID p : hg.pins(e)) {
        if (!seen[p]) {
          seen[p] = 1;
          queue[turn].push_back(p);
        }
      }
    }
    turn = 1 - turn;
  }
  placeLeftovers(hg, part, weight, goals);
  return part;
}

std::vector<BlockID> flatGreedyGrowing(const Hypergraph& hg,
                                       const BipartitionGoals& goals,
                                       Rng& rng) {
  const VertexID n = hg.numVertices();
  std::vector<BlockID> part(n, 1);
  TwowayCounters tc;
  tc.init(hg, part);
  std::vector<uint8_t> rejected(n, 0);
  std::vector<uint8_t> seeded(n, 0);
  AddressablePQ pq;
  pq.resize(n);

  // The frontier queue holds side-1 vertices adjacent to the grown block,
  // keyed by exact gain. Gains change only when an incident net crosses a
  // pin-count threshold, so a claim costs O(degree) plus one pin scan per
  // crossing net instead of a from-scratch recomputation per neighbor.
  auto touch = [&](VertexID p) {
    if (part[p] == 1 && !rejected[p] && !pq.contains(p)) {
      pq.insert(p, tc.gainOf(hg, part, p));
    }
  };
  auto bump = [&](VertexID p, Gain delta) {
    if (part[p] == 1 && !rejected[p] && pq.contains(p)) {
      pq.insertOrAdjust(p, pq.keyOf(p) + delta);
    }
  };

  auto claim = [&](VertexID v) {
    if (pq.contains(v)) {
      pq.remove(v);
    }
    for (const NetID e : hg.incidentNets(v)) {
      const size_t size = hg.pins(e).size();
      const uint32_t ones_left = size - tc.phi0[e] - 1;
      if (tc.phi0[e] == 0 || ones_left == 1) {
        for (const VertexID p : hg.pins(e)) {
          if (p == v) {
            continue;
          }
          if (tc.phi0[e] == 0) {
            bump(p, hg.netWeight(e));  // net no longer purely on side 1
          }
          if (ones_left == 1 && part[p] == 1) {
            bump(p, hg.netWeight(e));  // p is the last side-1 pin
          }
        }
      }
    }
    tc.flip(hg, part, v);
    for (const NetID e : hg.incidentNets(v)) {
      for (const VertexID p : hg.pins(e)) {
        touch(p);
      }
    }
  };

  const VertexID start = static_cast<VertexID>(rng.nextBounded(n));
  seeded[start] = 1;
  if (hg.vertexWeight(start) <= goals.target0) {
    claim(start);
  }
  while (tc.weight[0] < goals.target0) {
    VertexID v = kInvalidVertex;
    if (!pq.empty()) {
      v = pq.deleteMax().vertex;
    } else {
      // The grown component is exhausted; seed a new one.
      v = drawUnseen(seeded, n, rng);
      if (v == kInvalidVertex) {
        break;
      }
      seeded[v] = 1;
      if (part[v] == 0) {
        continue;
      }
    }
    if (tc.weight[0] + hg.vertexWeight(v) > goals.target0) {
      rejected[v] = 1;
      continue;
    }
    claim(v);
  }
  return part;
}

std::vector<BlockID> flatLpGrowing(const Hypergraph& hg,
                                   const BipartitionGoals& goals, Rng& rng) {
  const VertexID n = hg.numVertices();
  const NetID m = hg.numNets();
  std::vector<BlockID> part(n, kInvalidBlock);
  std::vector<uint32_t> assigned_pins[2];
  assigned_pins[0].assign(m, 0);
  assigned_pins[1].assign(m, 0);
  Weight weight[2] = {0, 0};
  // score[s][v] sums the weight of nets incident to v with a pin on side s;
  // it only grows, and a net contributes exactly once per side, when its
  // first pin lands there. That event also enqueues the net's free pins, so
  // the whole growth phase is linear in the number of pins.
  std::vector<Gain> score[2];
  score[0].assign(n, 0);
  score[1].assign(n, 0);
  std::deque<VertexID> queue;

  auto assign = [&](VertexID v, BlockID side) {
    part[v] = side;
    weight[side] += hg.vertexWeight(v);
    for (const NetID e : hg.incidentNets(v)) {
      if (assigned_pins[side][e]++ == 0) {
        for (const VertexID p : hg.pins(e)) {
          score[side][p] += hg.netWeight(e);
          if (part[p] == kInvalidBlock) {
            queue.push_back(p);
          }
        }
      }
    }
  };

  std::vector<uint8_t> seen(n, 0);
  const VertexID s0 = static_cast<VertexID>(rng.nextBounded(n));
  seen[s0] = 1;
  assign(s0, 0);
  if (n > 1) {
    const VertexID s1 = drawUnseen(seen, n, rng);
    assign(s1, 1);
  }

  while (!queue.empty()) {
    const VertexID v = queue.front();
    queue.pop_front();
    if (part[v] != kInvalidBlock) {
      continue;
    }
    const Weight w = hg.vertexWeight(v);
    BlockID side;
    if (score[0][v] != score[1][v]) {
      side = score[0][v] > score[1][v] ? 0 : 1;
    } else {
      side = (goals.target0 - weight[0]) >= (goals.target1 - weight[1]) ? 0
                                                                        : 1;
    }
    if (weight[side] + w > sideTarget(goals, side)) {
      side = 1 - side;
      if (score[side][v] == 0 ||
          weight[side] + w > sideTarget(goals, side)) {
        continue;  // re-enqueued if an adjacent net reaches the other side
      }
    }
    assign(v, side);
  }
  placeLeftovers(hg, part, weight, goals);
  return part;
}

// One sequential label propagation pass: each vertex in id order moves to
// the other side when that strictly improves the metric and fits the limit.
void sequentialLpPass(const Hypergraph& hg, std::vector<BlockID>& part,
                      TwowayCounters& tc, const BipartitionGoals& goals) {
  for (VertexID v = 0; v < hg.numVertices(); ++v) {
    const BlockID to = 1 - part[v];
    if (tc.weight[to] + hg.vertexWeight(v) > sideLimit(goals, to)) {
      continue;
    }
    if (tc.gainOf(hg, part, v) > 0) {
      tc.flip(hg, part, v);
    }
  }
}

// Lexicographic portfolio ranking: feasible before infeasible, then smaller
// overload, then smaller metric, then lower task seed.
struct RankedBipartition {
  Bipartition bp;
  Weight overload = 0;
  uint64_t task_seed = 0;
  bool valid = false;
};

bool ranksBefore(const RankedBipartition& a, const RankedBipartition& b) {
  if (a.bp.feasible != b.bp.feasible) {
    return a.bp.feasible;
  }
  if (!a.bp.feasible && a.overload != b.overload) {
    return a.overload < b.overload;
  }
  if (a.bp.metric != b.bp.metric) {
    return a.bp.metric < b.bp.metric;
  }
  return a.task_seed < b.task_seed;
}

Weight bipartitionOverload(const Hypergraph& hg, const Bipartition& bp,
                           const BipartitionGoals& goals) {
  TwowayCounters tc;
  tc.init(hg, bp.part);
  return overloadOf(tc, goals);
}

}  // namespace

BipartitionGoals evenBipartitionGoals(const Hypergraph& hg, double eps) {
  const Weight target = (hg.totalWeight() + 1) / 2;
  const Weight limit =
      static_cast<Weight>((1.0 + eps) * static_cast<double>(target) + 1e-9);
  return BipartitionGoals{target, target, limit, limit};
}

Gain bipartitionMetric(const Hypergraph& hg, std::span<const BlockID> part) {
  Gain metric = 0;
  for (NetID e = 0; e < hg.numNets(); ++e) {
    uint32_t side0 = 0;
    for (const VertexID p : hg.pins(e)) {
      side0 += part[p] == 0;
    }
    if (side0 > 0 && side0 < hg.pins(e).size()) {
      metric += hg.netWeight(e);
    }
  }
  return metric;
}

Bipartition flatBipartition(const Hypergraph& hg, const BipartitionGoals& goals,
                            uint64_t seed, FlatAlgorithm algorithm) {
  const VertexID n = hg.numVertices();
  if (n == 0) {
    return Bipartition{{}, 0, true};
  }
  Rng rng(seed);
  std::vector<BlockID> part;
  switch (algorithm) {
    case FlatAlgorithm::kRandom:
      part = flatRandom(hg, goals, rng);
      break;
    case FlatAlgorithm::kBfs:
      part = flatBfs(hg, goals, rng);
      break;
    case FlatAlgorithm::kAlternatingBfs:
      part = flatAlternatingBfs(hg, goals, rng);
      break;
    case FlatAlgorithm::kGreedyGrowing:
      part = flatGreedyGrowing(hg, goals, rng);
      break;
    case FlatAlgorithm::kLpGrowing:
      part = flatLpGrowing(hg, goals, rng);
      break;
  }
  return finalize(hg, std::move(part), goals);
}

uint64_t portfolioTaskSeed(uint64_t seed, FlatAlgorithm algorithm, int run) {
  return hashPair(seed, static_cast<uint64_t>(algorithm) << 32 |
                            static_cast<uint32_t>(run));
}

Bipartition portfolioBipartition(const Hypergraph& hg,
                                 const BipartitionGoals& goals,
                                 const PartitionConfig& config, uint64_t seed) {
  const int runs = std::max(1, config.ip_runs_per_algorithm);
  const int tasks = kNumFlatAlgorithms * runs;

  tbb::enumerable_thread_specific<RankedBipartition> tls_best;
  parallelFor(0, static_cast<size_t>(tasks), [&](size_t t) {
    const auto algorithm = static_cast<FlatAlgorithm>(static_cast<int>(t) / runs);
    const uint64_t task_seed = portfolioTaskSeed(seed, algorithm, static_cast<int>(t) % runs);
    Bipartition bp = flatBipartition(hg, goals, task_seed, algorithm);
    TwowayCounters tc;
    tc.init(hg, bp.part);
    sequentialLpPass(hg, bp.part, tc, goals);
    bp.metric = tc.metric;
    bp.feasible = feasibleWeights(tc, goals);
    RankedBipartition ranked{std::move(bp), overloadOf(tc, goals), task_seed,
                             true};
    RankedBipartition& best = tls_best.local();
    if (!best.valid || ranksBefore(ranked, best)) {
      best = std::move(ranked);
    }
  }, 1);

  // Every worker polishes the best bipartition it produced with sequential
  // two-way FM, then the overall best of those wins.
  RankedBipartition global;
  for (RankedBipartition& entry : tls_best) {
    if (!entry.valid) {
      continue;
    }
    RankedBipartition polished;
    polished.bp = twowayFm(hg, std::move(entry.bp), goals);
    polished.overload = bipartitionOverload(hg, polished.bp, goals);
    polished.task_seed = entry.task_seed;
    polished.valid = true;
    if (!global.valid || ranksBefore(polished, global)) {
      global = std::move(polished);
    }
  }
  HP_ASSERT(global.valid);
  if (!global.bp.feasible) {
    std::fprintf(stderr,
                 "initial bipartitioning found no feasible result; "
                 "returning the least imbalanced one\n");
  }
  return std::move(global.bp);
}

Bipartition twowayFm(const Hypergraph& hg, Bipartition input,
                     const BipartitionGoals& goals) {
  const VertexID n = hg.numVertices();
  if (n == 0) {
    return input;
  }
  std::vector<BlockID> part = std::move(input.part);
  TwowayCounters tc;
  tc.init(hg, part);

  AddressablePQ pq[2];
  pq[0].resize(n);
  pq[1].resize(n);
  std::vector<uint8_t> moved(n, 0);
  std::vector<VertexID> trail;
  trail.reserve(n);

  for (;;) {
    pq[0].clear();
    pq[1].clear();
    std::fill(moved.begin(), moved.end(), 0);
    trail.clear();
    for (VertexID v = 0; v < n; ++v) {
      const bool boundary = std::any_of(
          hg.incidentNets(v).begin(), hg.incidentNets(v).end(),
          [&](NetID e) { return tc.cut(hg, e); });
      if (boundary) {
        pq[part[v]].insert(v, tc.gainOf(hg, part, v));
      }
    }

    const bool start_feasible = feasibleWeights(tc, goals);
    const Gain start_metric = tc.metric;
    // Prefix 0 = no move; order: feasible first, lower metric, shorter.
    size_t best_length = 0;
    bool best_feasible = start_feasible;
    Gain best_metric = start_metric;

    for (;;) {
      VertexID pick = kInvalidVertex;
      Gain pick_gain = 0;
      BlockID pick_from = 0;
      for (const BlockID d : {BlockID{0}, BlockID{1}}) {
        if (pq[d].empty()) {
          continue;
        }
        const auto top = pq[d].deleteMax();  // re-inserted unless chosen
        pq[d].insert(top.vertex, top.key);
        const BlockID to = 1 - d;
        if (tc.weight[to] + hg.vertexWeight(top.vertex) >
            sideLimit(goals, to)) {
          continue;
        }
        // Ties prefer moving off the heavier side, then the lower id.
        if (pick == kInvalidVertex || top.key > pick_gain ||
            (top.key == pick_gain &&
             (tc.weight[d] > tc.weight[pick_from] ||
              (tc.weight[d] == tc.weight[pick_from] && top.vertex < pick)))) {
          pick = top.vertex;
          pick_gain = top.key;
          pick_from = d;
        }
      }
      if (pick == kInvalidVertex) {
        break;
      }
      pq[pick_from].remove(pick);
      moved[pick] = 1;
      // Gains of neighbors change only when a net's per-side pin count
      // crosses 1 or size-1; bump tracked keys by the net weight instead of
      // recomputing them, which keeps a move linear in its nets' pin counts.
      auto bump = [&](VertexID p, Gain delta) {
        if (!moved[p] && pq[part[p]].contains(p)) {
          pq[part[p]].insertOrAdjust(p, pq[part[p]].keyOf(p) + delta);
        }
      };
      for (const NetID e : hg.incidentNets(pick)) {
        const size_t size = hg.pins(e).size();
        const uint32_t to_pins =
            pick_from == 0 ? size - tc.phi0[e] : tc.phi0[e];
        const uint32_t from_rest = size - to_pins - 1;
        if (to_pins <= 1 || from_rest <= 1) {
          const Gain w = hg.netWeight(e);
          for (const VertexID p : hg.pins(e)) {
            if (p == pick) {
              continue;
            }
            Gain delta = 0;
            if (to_pins == 0) {
              delta += w;  // the net stops being internal to the source side
            } else if (to_pins == 1 && part[p] != pick_from) {
              delta -= w;  // p was the lone target-side pin
            }
            if (from_rest == 0) {
              delta -= w;  // the net becomes internal to the target side
            } else if (from_rest == 1 && part[p] == pick_from) {
              delta += w;  // p becomes the lone source-side pin
            }
            if (delta != 0) {
              bump(p, delta);
            }
          }
        }
      }
      tc.flip(hg, part, pick);
      trail.push_back(pick);
      for (const NetID e : hg.incidentNets(pick)) {
        for (const VertexID p : hg.pins(e)) {
          if (!moved[p] && !pq[part[p]].contains(p)) {
            pq[part[p]].insert(p, tc.gainOf(hg, part, p));
          }
        }
      }
      const bool now_feasible = feasibleWeights(tc, goals);
      if (now_feasible > best_feasible ||
          (now_feasible == best_feasible && tc.metric < best_metric)) {
        best_feasible = now_feasible;
        best_metric = tc.metric;
        best_length = trail.size();
      }
    }

#ifdef HYPERPART_ENABLE_ASSERTIONS
    for (const BlockID d : {BlockID{0}, BlockID{1}}) {
      pq[d].forEach([&](VertexID v, Gain key) {
        HP_ASSERT(key == tc.gainOf(hg, part, v),
                  "two-way FM delta updates must keep keys exact");
      });
    }
#endif
    // Roll back to the best prefix; flips are involutions.
    while (trail.size() > best_length) {
      tc.flip(hg, part, trail.back());
      trail.pop_back();
    }
    HP_ASSERT(tc.metric == best_metric);
    if (best_length == 0) {
      break;
    }
  }
  return Bipartition{std::move(part), tc.metric, feasibleWeights(tc, goals)};
}

SideExtraction extractSide(const Hypergraph& hg, std::span<const BlockID> part,
                           BlockID side) {
  const VertexID n = hg.numVertices();
  SideExtraction out;
  std::vector<VertexID> to_sub(n, kInvalidVertex);
  for (VertexID v = 0; v < n; ++v) {
    if (part[v] == side) {
      to_sub[v] = static_cast<VertexID>(out.to_parent.size());
      out.to_parent.push_back(v);
    }
  }
  std::vector<size_t> offsets{0};
  std::vector<VertexID> pins;
  std::vector<Weight> net_weights;
  for (NetID e = 0; e < hg.numNets(); ++e) {
    size_t kept = 0;
    for (const VertexID p : hg.pins(e)) {
      if (to_sub[p] != kInvalidVertex) {
        ++kept;
      }
    }
    if (kept < 2) {
      continue;
    }
    for (const VertexID p : hg.pins(e)) {
      if (to_sub[p] != kInvalidVertex) {
        pins.push_back(to_sub[p]);
      }
    }
    offsets.push_back(pins.size());
    net_weights.push_back(hg.netWeight(e));
  }
  std::vector<Weight> vertex_weights;
  vertex_weights.reserve(out.to_parent.size());
  for (const VertexID v : out.to_parent) {
    vertex_weights.push_back(hg.vertexWeight(v));
  }
  out.hg = Hypergraph::build(static_cast<VertexID>(out.to_parent.size()),
                             std::move(offsets), std::move(pins),
                             std::move(net_weights), std::move(vertex_weights));
  return out;
}

namespace {

// Both recursion children need at least as many vertices as blocks; shove
// the best-gain (then lightest, then lowest id) vertices across until the
// counts work out. Only tiny coarsest instances ever trigger this.
void repairSideCounts(const Hypergraph& hg, std::vector<BlockID>& part,
                      BlockID k0, BlockID k1) {
  const VertexID n = hg.numVertices();
  VertexID count[2] = {0, 0};
  for (VertexID v = 0; v < n; ++v) {
    ++count[part[v]];
  }
  TwowayCounters tc;
  tc.init(hg, part);
  const VertexID need[2] = {static_cast<VertexID>(k0),
                            static_cast<VertexID>(k1)};
  for (const BlockID side : {BlockID{0}, BlockID{1}}) {
    while (count[side] < need[side]) {
      VertexID best = kInvalidVertex;
      Gain best_gain = 0;
      for (VertexID v = 0; v < n; ++v) {
        if (part[v] == side) {
          continue;
        }
        const Gain gain = tc.gainOf(hg, part, v);
        if (best == kInvalidVertex || gain > best_gain ||
            (gain == best_gain &&
             (hg.vertexWeight(v) < hg.vertexWeight(best) ||
              (hg.vertexWeight(v) == hg.vertexWeight(best) && v < best)))) {
          best = v;
          best_gain = gain;
        }
      }
      HP_ASSERT(best != kInvalidVertex);
      tc.flip(hg, part, best);
      ++count[side];
      --count[1 - side];
    }
  }
}

struct RbContext {
  const PartitionConfig* config;
  double eps_prime;
  std::vector<BlockID>* root_part;
};

void rbBisect(const Hypergraph& hg, const std::vector<CommunityID>& communities,
              const std::vector<VertexID>& to_root, BlockID k,
              BlockID block_offset, uint64_t seed, const RbContext& ctx) {
  const VertexID n = hg.numVertices();
  HP_ASSERT(static_cast<VertexID>(k) <= n || n == 0);
  std::vector<BlockID>& root_part = *ctx.root_part;
  if (k <= 1 || n == 0) {
    for (VertexID v = 0; v < n; ++v) {
      root_part[to_root[v]] = block_offset;
    }
    return;
  }
  const BlockID k0 = (k + 1) / 2;
  const BlockID k1 = k / 2;
  const Weight total = hg.totalWeight();
  BipartitionGoals goals;
  goals.target0 = (total * k0 + k - 1) / k;
  goals.target1 = (total * k1 + k - 1) / k;
  auto side_limit = [&](BlockID ks, Weight target) {
    const double raw = (1.0 + ctx.eps_prime) *
                       (static_cast<double>(total) * ks / k);
    return std::max<Weight>(target, static_cast<Weight>(raw + 1e-9));
  };
  goals.limit0 = side_limit(k0, goals.target0);
  goals.limit1 = side_limit(k1, goals.target1);

  PartitionConfig rb_config = *ctx.config;
  rb_config.k = 2;
  CoarseningHierarchy hierarchy = coarsen(hg, communities, rb_config);
  const Hypergraph& coarsest = hierarchy.coarsest(hg);
  Bipartition bp = portfolioBipartition(coarsest, goals, rb_config,
                                        hashPair(seed, 0x90851));
  std::vector<BlockID> part = std::move(bp.part);
  const Weight level_limits[2] = {goals.limit0, goals.limit1};
  for (size_t level = hierarchy.levels.size(); level-- > 0;) {
    const Hypergraph& finer =
        level == 0 ? hg : hierarchy.levels[level - 1].hg;
    const std::vector<VertexID>& map = hierarchy.levels[level].fine_to_coarse;
    std::vector<BlockID> fine_part(finer.numVertices());
    for (VertexID v = 0; v < finer.numVertices(); ++v) {
      fine_part[v] = part[map[v]];
    }
    PartitionedHypergraph phg(finer, 2);
    phg.assignPartition(fine_part);
    lpRefine(phg, rb_config, hashPair(seed, 0x17 + level), -1,
             std::span<const Weight>(level_limits, 2));
    Bipartition level_bp{phg.extractPartition(), 0, false};
    level_bp = twowayFm(finer, std::move(level_bp), goals);
    part = std::move(level_bp.part);
  }

  repairSideCounts(hg, part, k0, k1);

  SideExtraction sides[2] = {extractSide(hg, part, 0),
                             extractSide(hg, part, 1)};
  std::vector<CommunityID> sub_communities[2];
  std::vector<VertexID> sub_to_root[2];
  for (const BlockID s : {BlockID{0}, BlockID{1}}) {
    sub_communities[s].reserve(sides[s].to_parent.size());
    sub_to_root[s].reserve(sides[s].to_parent.size());
    for (const VertexID v : sides[s].to_parent) {
      sub_communities[s].push_back(communities[v]);
      sub_to_root[s].push_back(to_root[v]);
    }
  }
  tbb::parallel_invoke(
      [&] {
        rbBisect(sides[0].hg, sub_communities[0], sub_to_root[0], k0,
                 block_offset, hashPair(seed, 1), ctx);
      },
      [&] {
        rbBisect(sides[1].hg, sub_communities[1], sub_to_root[1], k1,
                 block_offset + k0, hashPair(seed, 2), ctx);
      });
}

}  // namespace

PartitionedHypergraph recursiveBipartition(
    const Hypergraph& hg, BlockID k, const PartitionConfig& config,
    std::span<const CommunityID> communities, uint64_t seed) {
  const VertexID n = hg.numVertices();
  HP_ASSERT(k >= 1);
  if (static_cast<VertexID>(k) > n) {
    throw std::runtime_error("recursive bipartitioning: k exceeds the number "
                             "of vertices");
  }
  std::vector<BlockID> part(n, 0);
  if (k >= 2) {
    const int depth = std::bit_width(static_cast<uint32_t>(k - 1));
    RbContext ctx{&config,
                  std::pow(1.0 + config.epsilon, 1.0 / depth) - 1.0, &part};
    std::vector<VertexID> identity(n);
    for (VertexID v = 0; v < n; ++v) {
      identity[v] = v;
    }
    std::vector<CommunityID> comm(communities.begin(), communities.end());
    HP_ASSERT(comm.size() == static_cast<size_t>(n));
    rbBisect(hg, comm, identity, k, 0, seed, ctx);
  }
  PartitionedHypergraph phg(hg, k);
  phg.assignPartition(part);
  return phg;
}

}  // namespace hyperpart
