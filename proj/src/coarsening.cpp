#include "hyperpart/coarsening.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <thread>
#include <tuple>
#include <vector>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_sort.h>

#include "hyperpart/block_shuffle.hpp"
#include "hyperpart/parallel.hpp"
#include "hyperpart/random.hpp"

namespace hyperpart {

namespace {

enum JoinState : uint8_t {
  kFree = 0,    // singleton, open to capture and to joining
  kBusy = 1,    // currently looking for a cluster to join
  kMember = 2,  // joined; target holds the representative
  kRep = 3,     // representative of a cluster; never joins anyone
};

struct JoinArrays {
  std::vector<AtomicWrapper<uint8_t>> state;
  std::vector<AtomicWrapper<VertexID>> target;
  // The cluster a busy vertex intends to join; lets concurrent busy vertices
  // detect join cycles without waiting on each other.
  std::vector<AtomicWrapper<VertexID>> desired;
  std::vector<AtomicWrapper<Weight>> weight;

  explicit JoinArrays(const Hypergraph& hg)
      : state(hg.numVertices()),
        target(hg.numVertices()),
        desired(hg.numVertices()),
        weight(hg.numVertices()) {
    parallelFor(VertexID{0}, hg.numVertices(), [&](VertexID u) {
      target[u].store(u, std::memory_order_relaxed);
      desired[u].store(u, std::memory_order_relaxed);
      weight[u].store(hg.vertexWeight(u), std::memory_order_relaxed);
    });
  }
};

// Members only ever point at settled representatives, so one hop resolves.
inline VertexID labelOf(const JoinArrays& js, VertexID p) {
  return js.state[p].load(std::memory_order_acquire) == kMember
             ? js.target[p].load(std::memory_order_relaxed)
             : p;
}

// Tries to move u (currently kFree) into the cluster v belongs to. Returns
// true iff u ended up a member; on any conflict u reverts to kFree so a
// later pass can retry it.
bool tryJoin(const Hypergraph& hg, JoinArrays& js, VertexID u, VertexID v,
             Weight max_cluster_weight) {
  uint8_t expected = kFree;
  if (!js.state[u].compare_exchange_strong(expected, kBusy,
                                         std::memory_order_acq_rel)) {
    return false;
  }
  js.desired[u].store(v, std::memory_order_release);
  const Weight w_u = hg.vertexWeight(u);
  for (int attempt = 0; attempt < 64; ++attempt) {
    // Resolve the current representative of v's cluster.
    VertexID r = v;
    uint8_t rs = js.state[r].load(std::memory_order_acquire);
    while (rs == kMember) {
      r = js.target[r].load(std::memory_order_relaxed);
      rs = js.state[r].load(std::memory_order_acquire);
    }
    if (r == u) {
      break;  // v's cluster collapsed into u itself; nothing to join
    }
    if (rs == kBusy) {
      // r is itself joining someone. Walk the intended-join chain; if it
      // cycles back to u and u holds the smallest busy id on it, u cancels
      // to break the deadlock (the others then see u as kFree and proceed).
      VertexID walk = r;
      VertexID min_busy = r;
      bool cycle = false;
      for (int steps = 0; steps < 64; ++steps) {
        const VertexID next =
            js.state[walk].load(std::memory_order_acquire) == kBusy
                ? js.desired[walk].load(std::memory_order_acquire)
                : labelOf(js, walk);
        if (next == walk) {
          break;
        }
        walk = next;
        if (walk == u) {
          cycle = true;
          break;
        }
        if (js.state[walk].load(std::memory_order_acquire) == kBusy) {
          min_busy = std::min(min_busy, walk);
        }
      }
      if (cycle && u <= min_busy) {
        break;  // cancel; a stale cycle costs one merge, never progress
      }
      std::this_thread::yield();
      continue;
    }
    if (rs == kFree) {
      // Capture r as a fresh representative first, so its weight can no
      // longer move away underneath the check below.
      uint8_t free_state = kFree;
      if (!js.state[r].compare_exchange_strong(free_state, kRep,
                                             std::memory_order_acq_rel)) {
        continue;
      }
    } else if (rs != kRep) {
      continue;  // became a member in between; re-resolve
    }
    const Weight prev = js.weight[r].fetch_add(w_u, std::memory_order_acq_rel);
    if (prev + w_u > max_cluster_weight) {
      js.weight[r].fetch_sub(w_u, std::memory_order_acq_rel);
      break;  // cluster filled up since the rating was computed
    }
    js.target[u].store(r, std::memory_order_relaxed);
    js.state[u].store(kMember, std::memory_order_release);
    return true;
  }
  js.state[u].store(kFree, std::memory_order_release);
  return false;
}

// Scratch for accumulating per-cluster heavy-edge ratings. A small probing
// table covers the common case; vertices whose incident nets touch too many
// pins fall back to arrays indexed by cluster id directly.
struct RatingScratch {
  struct Slot {
    VertexID cluster = kInvalidVertex;
    uint64_t stamp = 0;
    double rating = 0.0;
  };
  std::vector<Slot> table;
  std::vector<uint32_t> used_slots;
  std::vector<double> dense_rating;
  std::vector<uint64_t> dense_stamp;
  std::vector<VertexID> dense_used;
  uint32_t mask = 0;
  // Advanced once per visited net; stamps deduplicate a net's contribution
  // per cluster without any clearing between nets.
  uint64_t visit = 0;

  void ensure(uint32_t capacity, VertexID n) {
    if (table.size() != capacity) {
      table.assign(capacity, Slot{});
      mask = capacity - 1;
    }
    if (dense_rating.size() < n) {
      dense_rating.assign(n, 0.0);
      dense_stamp.assign(n, 0);
    }
  }
};

inline uint32_t roundUpPow2(uint32_t x) {
  uint32_t p = 1;
  while (p < x) {
    p <<= 1;
  }
  return p;
}

// Highest-rated join candidate for u among clusters of its neighbors in the
// same community, or kInvalidVertex. Rating of cluster C is the sum over
// incident nets with a pin in C of w(e) / (|e| - 1), each net counted once
// per cluster. Ties break by a stateless hash so the choice is identical
// for every schedule.
VertexID bestTarget(const Hypergraph& hg, VertexID u,
                    std::span<const CommunityID> community,
                    const JoinArrays& js, RatingScratch& scratch,
                    Weight max_cluster_weight, uint32_t table_capacity,
                    uint64_t tie_seed) {
  size_t incident_pins = 0;
  for (const NetID e : hg.incidentNets(u)) {
    incident_pins += hg.netSize(e);
  }
  if (incident_pins == 0) {
    return kInvalidVertex;
  }
  scratch.ensure(table_capacity, hg.numVertices());
  const bool dense = incident_pins > table_capacity / 3;
  const CommunityID com_u = community[u];

  auto addRating = [&](VertexID c, double w) {
    if (dense) {
      if (scratch.dense_stamp[c] != scratch.visit) {
        if (scratch.dense_rating[c] == 0.0) {
          scratch.dense_used.push_back(c);
        }
        scratch.dense_stamp[c] = scratch.visit;
        scratch.dense_rating[c] += w;
      }
    } else {
      uint32_t idx = static_cast<uint32_t>(hashPair(c, 0x9E3779B97F4A7C15ULL)) &
                     scratch.mask;
      while (true) {
        RatingScratch::Slot& s = scratch.table[idx];
        if (s.cluster == c) {
          if (s.stamp != scratch.visit) {
            s.stamp = scratch.visit;
            s.rating += w;
          }
          return;
        }
        if (s.cluster == kInvalidVertex) {
          s.cluster = c;
          s.stamp = scratch.visit;
          s.rating = w;
          scratch.used_slots.push_back(idx);
          return;
        }
        idx = (idx + 1) & scratch.mask;
      }
    }
  };

  for (const NetID e : hg.incidentNets(u)) {
    const double w = static_cast<double>(hg.netWeight(e)) /
                     static_cast<double>(hg.netSize(e) - 1);
    ++scratch.visit;
    for (const VertexID p : hg.pins(e)) {
      if (p == u || community[p] != com_u) {
        continue;
      }
      const VertexID c = labelOf(js, p);
      if (c == u) {
        continue;
      }
      addRating(c, w);
    }
  }

  const Weight w_u = hg.vertexWeight(u);
  VertexID best = kInvalidVertex;
  double best_rating = 0.0;
  uint64_t best_hash = 0;
  auto consider = [&](VertexID c, double rating) {
    // Racy weight pre-check; tryJoin enforces the bound authoritatively.
    if (js.weight[c].load(std::memory_order_relaxed) + w_u >
        max_cluster_weight) {
      return;
    }
    const uint64_t h = hashPair(hashPair(tie_seed, u), c);
    if (best == kInvalidVertex || rating > best_rating ||
        (rating == best_rating && h > best_hash)) {
      best = c;
      best_rating = rating;
      best_hash = h;
    }
  };
  if (dense) {
    for (const VertexID c : scratch.dense_used) {
      consider(c, scratch.dense_rating[c]);
      scratch.dense_rating[c] = 0.0;
    }
    scratch.dense_used.clear();
  } else {
    for (const uint32_t idx : scratch.used_slots) {
      consider(scratch.table[idx].cluster, scratch.table[idx].rating);
      scratch.table[idx] = RatingScratch::Slot{};
    }
    scratch.used_slots.clear();
  }
  return best;
}

size_t clusteringPass(const Hypergraph& hg,
                      std::span<const CommunityID> community, JoinArrays& js,
                      Weight max_cluster_weight, const PartitionConfig& config,
                      uint64_t pass_seed) {
  const VertexID n = hg.numVertices();
  std::vector<VertexID> order(n);
  std::iota(order.begin(), order.end(), VertexID{0});
  blockShuffle(std::span<VertexID>(order), pass_seed, config.num_threads);

  const uint32_t table_capacity = roundUpPow2(
      std::max<uint32_t>(16, config.rating_table_capacity));
  const size_t sample_interval =
      std::max(1, config.coarsening_sample_interval);
  std::atomic<size_t> members{0};
  std::atomic<bool> stop{false};
  tbb::enumerable_thread_specific<RatingScratch> tls_scratch;
  tbb::enumerable_thread_specific<size_t> tls_processed{0};

  parallelFor(size_t{0}, order.size(), [&](size_t i) {
    if (stop.load(std::memory_order_relaxed)) {
      return;
    }
    size_t& processed = tls_processed.local();
    if (++processed % sample_interval == 0) {
      const size_t merged = members.load(std::memory_order_relaxed);
      if (static_cast<double>(n) / static_cast<double>(n - merged) >=
          config.coarsening_pass_reduction_cutoff) {
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
    const VertexID u = order[i];
    if (js.state[u].load(std::memory_order_acquire) != kFree) {
      return;  // already captured as a representative
    }
    const VertexID best =
        bestTarget(hg, u, community, js, tls_scratch.local(),
                   max_cluster_weight, table_capacity, pass_seed);
    if (best == kInvalidVertex) {
      return;
    }
    if (tryJoin(hg, js, u, best, max_cluster_weight)) {
      members.fetch_add(1, std::memory_order_relaxed);
    }
  }, 64);
  return members.load();
}

}  // namespace

ContractionResult contractClusters(const Hypergraph& hg,
                                   std::span<const VertexID> cluster_of) {
  const VertexID n = hg.numVertices();
  HP_ASSERT(cluster_of.size() == n);

  // Compact the used labels in ascending order.
  std::vector<uint8_t> used(n, 0);
  parallelFor(VertexID{0}, n, [&](VertexID u) {
    HP_ASSERT(cluster_of[u] < n);
    std::atomic_ref<uint8_t>(used[cluster_of[u]])
        .store(1, std::memory_order_relaxed);
  });
  std::vector<VertexID> compact(n, kInvalidVertex);
  VertexID coarse_n = 0;
  for (VertexID c = 0; c < n; ++c) {
    if (used[c]) {
      compact[c] = coarse_n++;
    }
  }
  std::vector<VertexID> fine_to_coarse(n);
  std::vector<AtomicWrapper<Weight>> coarse_weight_acc(coarse_n);
  parallelFor(VertexID{0}, n, [&](VertexID u) {
    const VertexID cu = compact[cluster_of[u]];
    fine_to_coarse[u] = cu;
    coarse_weight_acc[cu].fetch_add(hg.vertexWeight(u),
                                   std::memory_order_relaxed);
  });
  std::vector<Weight> coarse_weights(coarse_n);
  for (VertexID u = 0; u < coarse_n; ++u) {
    coarse_weights[u] = coarse_weight_acc[u].load(std::memory_order_relaxed);
  }

  // Remap every net into scratch at its own offset, sort, dedup; nets left
  // with fewer than two pins disappear.
  const NetID m = hg.numNets();
  std::vector<size_t> tmp_offsets(m + 1, 0);
  for (NetID e = 0; e < m; ++e) {
    tmp_offsets[e + 1] = tmp_offsets[e] + hg.netSize(e);
  }
  std::vector<VertexID> tmp_pins(tmp_offsets[m]);
  std::vector<uint32_t> new_size(m, 0);
  std::vector<uint64_t> fingerprint(m, 0);
  parallelFor(NetID{0}, m, [&](NetID e) {
    VertexID* out = tmp_pins.data() + tmp_offsets[e];
    size_t len = 0;
    for (const VertexID p : hg.pins(e)) {
      out[len++] = fine_to_coarse[p];
    }
    std::sort(out, out + len);
    len = std::unique(out, out + len) - out;
    new_size[e] = static_cast<uint32_t>(len);
    if (len >= 2) {
      // Wraparound sum of squared pin ids; cheap filter, collisions are
      // resolved by comparing the actual pins.
      uint64_t fp = 0;
      for (size_t i = 0; i < len; ++i) {
        const uint64_t v = out[i];
        fp += v * v;
      }
      fingerprint[e] = fp;
    }
  });

  struct NetKey {
    uint64_t fp;
    uint32_t size;
    NetID e;
  };
  std::vector<NetKey> keys;
  keys.reserve(m);
  for (NetID e = 0; e < m; ++e) {
    if (new_size[e] >= 2) {
      keys.push_back({fingerprint[e], new_size[e], e});
    }
  }
  tbb::parallel_sort(keys.begin(), keys.end(),
                     [](const NetKey& a, const NetKey& b) {
                       return std::tie(a.fp, a.size, a.e) <
                              std::tie(b.fp, b.size, b.e);
                     });

  // Within a (fingerprint, size) run, merge nets with identical pins into
  // the first (= lowest id) one.
  struct Group {
    NetID rep;
    Weight weight;
  };
  std::vector<Group> groups;
  groups.reserve(keys.size());
  std::vector<size_t> run_groups;
  size_t i = 0;
  while (i < keys.size()) {
    size_t j = i;
    while (j < keys.size() && keys[j].fp == keys[i].fp &&
           keys[j].size == keys[i].size) {
      ++j;
    }
    run_groups.clear();
    for (size_t a = i; a < j; ++a) {
      const NetID e = keys[a].e;
      const VertexID* pins_e = tmp_pins.data() + tmp_offsets[e];
      bool merged = false;
      for (const size_t g : run_groups) {
        const NetID rep = groups[g].rep;
        const VertexID* pins_rep = tmp_pins.data() + tmp_offsets[rep];
        if (std::equal(pins_e, pins_e + keys[a].size, pins_rep)) {
          groups[g].weight += hg.netWeight(e);
          merged = true;
          break;
        }
      }
      if (!merged) {
        run_groups.push_back(groups.size());
        groups.push_back({e, hg.netWeight(e)});
      }
    }
    i = j;
  }
  tbb::parallel_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.rep < b.rep; });

  std::vector<size_t> net_offsets(groups.size() + 1, 0);
  for (size_t g = 0; g < groups.size(); ++g) {
    net_offsets[g + 1] = net_offsets[g] + new_size[groups[g].rep];
  }
  std::vector<VertexID> pins(net_offsets.back());
  std::vector<Weight> net_weights(groups.size());
  parallelFor(size_t{0}, groups.size(), [&](size_t g) {
    const NetID rep = groups[g].rep;
    std::copy(tmp_pins.data() + tmp_offsets[rep],
              tmp_pins.data() + tmp_offsets[rep] + new_size[rep],
              pins.data() + net_offsets[g]);
    net_weights[g] = groups[g].weight;
  });

  ContractionResult result{
      Hypergraph::build(coarse_n, std::move(net_offsets), std::move(pins),
                        std::move(net_weights), std::move(coarse_weights)),
      std::move(fine_to_coarse)};
  return result;
}

CoarseningHierarchy coarsen(const Hypergraph& hg,
                            std::span<const CommunityID> vertex_community,
                            const PartitionConfig& config) {
  HP_ASSERT(vertex_community.size() == hg.numVertices());
  CoarseningHierarchy hierarchy;
  const VertexID limit = static_cast<VertexID>(
      std::max<Weight>(1, config.contraction_limit_multiplier * config.k));
  const Weight max_cluster_weight = maxClusterWeight(hg.totalWeight(), config);
  std::vector<CommunityID> community(vertex_community.begin(),
                                     vertex_community.end());
  const Hypergraph* current = &hg;
  int level = 0;
  while (current->numVertices() > limit && current->numNets() > 0) {
    JoinArrays js(*current);
    const size_t merges =
        clusteringPass(*current, community, js, max_cluster_weight, config,
                       hashPair(config.seed, 0xC0A05E + level));
    if (merges == 0) {
      break;
    }
    std::vector<VertexID> cluster_of(current->numVertices());
    parallelFor(VertexID{0}, current->numVertices(), [&](VertexID u) {
      cluster_of[u] = labelOf(js, u);
    });
    ContractionResult contracted = contractClusters(*current, cluster_of);
    const double factor = static_cast<double>(current->numVertices()) /
                          static_cast<double>(contracted.coarse.numVertices());
    std::vector<CommunityID> coarse_community(contracted.coarse.numVertices());
    parallelFor(VertexID{0}, current->numVertices(), [&](VertexID u) {
      // All vertices of a cluster share one community, so concurrent writers
      // agree on the value.
      std::atomic_ref<CommunityID>(coarse_community[contracted.fine_to_coarse[u]])
          .store(community[u], std::memory_order_relaxed);
    });
    hierarchy.levels.push_back({std::move(contracted.coarse),
                                std::move(contracted.fine_to_coarse)});
    current = &hierarchy.levels.back().hg;
    community = std::move(coarse_community);
    ++level;
    if (factor < config.coarsening_min_reduction) {
      break;
    }
  }
  return hierarchy;
}

}  // namespace hyperpart
