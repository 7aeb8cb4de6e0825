#include "hyperpart/gain_recalculation.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <limits>

#include <tbb/enumerable_thread_specific.h>
#include <tbb/parallel_sort.h>

#include "hyperpart/assertions.hpp"
#include "hyperpart/parallel.hpp"

namespace hyperpart {

namespace {

constexpr uint32_t kNoSlot = std::numeric_limits<uint32_t>::max();

inline void atomicIncrement(int32_t& reg) {
  std::atomic_ref<int32_t>(reg).fetch_add(1, std::memory_order_relaxed);
}

inline void atomicMax(int32_t& reg, int32_t v) {
  std::atomic_ref<int32_t> ref(reg);
  int32_t cur = ref.load(std::memory_order_relaxed);
  while (cur < v && !ref.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

// Min register with 0 as the rest state meaning "no arrival yet".
inline void atomicMinArrival(int32_t& reg, int32_t v) {
  std::atomic_ref<int32_t> ref(reg);
  int32_t cur = ref.load(std::memory_order_relaxed);
  while ((cur == 0 || cur > v) &&
         !ref.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

inline int32_t arrivalOrInfinity(int32_t raw) {
  return raw == 0 ? std::numeric_limits<int32_t>::max() : raw;
}

void zeroInts(int32_t* ptr, size_t count) {
  constexpr size_t kChunk = size_t{1} << 16;
  const size_t chunks = (count + kChunk - 1) / kChunk;
  parallelFor(size_t{0}, chunks, [&](size_t c) {
    const size_t begin = c * kChunk;
    std::memset(ptr + begin, 0, sizeof(int32_t) * std::min(kChunk, count - begin));
  }, 1);
}

}  // namespace

GainRecalculator::GainRecalculator(size_t dense_budget_bytes, MemoryPool* pool)
    : _dense_budget(dense_budget_bytes), _pool(pool) {}

void GainRecalculator::ensureScratch(size_t ints) {
  if (_scratch_ints >= ints) {
    return;
  }
  if (_pool != nullptr) {
    _pool_scratch = _pool->borrowArray<int32_t>(ints);
    _scratch = _pool_scratch.data();
  } else {
    _own_scratch.assign(ints, 0);
    _scratch = _own_scratch.data();
  }
  _scratch_ints = ints;
}

// Rebuilt on every call: the instance must not remember a hypergraph by
// address, a new one may reuse it. The scratch needs no re-zeroing here
// because allocation zeroes it and every round restores the rest state.
void GainRecalculator::computeSlots(const Hypergraph& hg, BlockID k) {
  _net_slot.assign(hg.numNets(), kNoSlot);
  uint32_t slots = 0;
  for (NetID e = 0; e < hg.numNets(); ++e) {
    if (hg.netSize(e) >= 3) {
      _net_slot[e] = slots++;
    }
  }
  _num_slots = slots;
  const size_t dense_ints = 4 * _num_slots * static_cast<size_t>(k);
  _used_dense = dense_ints * sizeof(int32_t) <= _dense_budget;
  if (_used_dense) {
    ensureScratch(dense_ints);
  }
}

void GainRecalculator::recalculateGains(const PartitionedHypergraph& phg,
                                        PinCountsState state, MoveSequence& moves,
                                        const ProbeFn& probe_fn) {
  const Hypergraph& hg = phg.hypergraph();
  const BlockID k = phg.k();
  computeSlots(hg, k);
  const size_t t = moves.size();
  if (_move_index.size() < hg.numVertices()) {
    _move_index.resize(hg.numVertices(), 0);
  }
  parallelFor(size_t{0}, t, [&](size_t idx) {
    const Move& m = moves[idx];
    HP_ASSERT(m.u < hg.numVertices() && m.from != m.to && m.from >= 0 && m.to >= 0 &&
              m.from < k && m.to < k);
    HP_ASSERT(_move_index[m.u] == 0, "vertex " << m.u << " moved twice in one round");
    _move_index[m.u] = static_cast<int32_t>(idx + 1);
  }, 512);

  // Touched (slot, block) pairs of nets with at least three pins. Two-pin
  // nets are recomputed from the other pin's timeline and need no registers.
  tbb::enumerable_thread_specific<std::vector<uint64_t>> tls_pairs;
  parallelFor(size_t{0}, t, [&](size_t idx) {
    const Move& m = moves[idx];
    auto& local = tls_pairs.local();
    for (const NetID e : hg.incidentNets(m.u)) {
      const uint32_t slot = _net_slot[e];
      if (slot == kNoSlot) {
        continue;
      }
      const uint64_t base = static_cast<uint64_t>(slot) * static_cast<uint64_t>(k);
      local.push_back(base + static_cast<uint64_t>(m.from));
      local.push_back(base + static_cast<uint64_t>(m.to));
    }
  }, 128);

  size_t stride = 0;
  if (_used_dense) {
    stride = _num_slots * static_cast<size_t>(k);
  } else {
    size_t total = 0;
    for (const auto& local : tls_pairs) {
      total += local.size();
    }
    _sparse_keys.resize(total);
    size_t offset = 0;
    for (const auto& local : tls_pairs) {
      std::copy(local.begin(), local.end(), _sparse_keys.begin() + offset);
      offset += local.size();
    }
    tbb::parallel_sort(_sparse_keys.begin(), _sparse_keys.end());
    _sparse_keys.erase(std::unique(_sparse_keys.begin(), _sparse_keys.end()),
                       _sparse_keys.end());
    stride = _sparse_keys.size();
    ensureScratch(4 * stride);
  }
  int32_t* out_count = _scratch;
  int32_t* in_count = _scratch + stride;
  int32_t* max_out = _scratch + 2 * stride;
  int32_t* min_in = _scratch + 3 * stride;

  auto locate = [&](NetID e, BlockID b) {
    const uint32_t slot = _net_slot[e];
    HP_ASSERT(slot != kNoSlot);
    const uint64_t key =
        static_cast<uint64_t>(slot) * static_cast<uint64_t>(k) + static_cast<uint64_t>(b);
    if (_used_dense) {
      return static_cast<size_t>(key);
    }
    const auto it = std::lower_bound(_sparse_keys.begin(), _sparse_keys.end(), key);
    HP_ASSERT(it != _sparse_keys.end() && *it == key);
    return static_cast<size_t>(it - _sparse_keys.begin());
  };

  // Phase 1: commutative register updates, identical for any thread count.
  parallelFor(size_t{0}, t, [&](size_t idx) {
    const Move& m = moves[idx];
    const int32_t j = static_cast<int32_t>(idx + 1);
    for (const NetID e : hg.incidentNets(m.u)) {
      if (_net_slot[e] == kNoSlot) {
        continue;
      }
      const size_t source = locate(e, m.from);
      const size_t target = locate(e, m.to);
      atomicIncrement(out_count[source]);
      atomicMax(max_out[source], j);
      atomicIncrement(in_count[target]);
      atomicMinArrival(min_in[target], j);
    }
  }, 128);

  // Block of v right before move j ran, reconstructed from v's own move.
  auto blockBefore = [&](VertexID v, int32_t j) {
    const int32_t iv = _move_index[v];
    if (iv == 0) {
      return phg.partOf(v);
    }
    const Move& mv = moves[static_cast<size_t>(iv) - 1];
    return j < iv ? mv.from : mv.to;
  };

  // Pins of the block that neither left nor arrived during the round. With
  // round-start counts the arrivals are not contained yet, with round-end
  // counts they are, so the correction differs.
  auto residue = [&](NetID e, BlockID b, size_t reg) {
    const int32_t now = phg.pinCountInBlock(e, b);
    return state == PinCountsState::kRoundStart ? now - out_count[reg] : now - in_count[reg];
  };

  // Move j removed the last source pin of e iff no pin of the source block
  // stayed for the whole round, j is the last departure, and every arrival
  // came later.
  auto removesLastSourcePin = [&](NetID e, const Move& m, int32_t j) {
    if (_net_slot[e] == kNoSlot) {
      const auto pins = hg.pins(e);
      const VertexID v = pins[0] == m.u ? pins[1] : pins[0];
      return blockBefore(v, j) != m.from;
    }
    const size_t reg = locate(e, m.from);
    return residue(e, m.from, reg) == 0 && max_out[reg] == j &&
           arrivalOrInfinity(min_in[reg]) > j;
  };

  // Move j added the first target pin of e iff no pin of the target block
  // stayed for the whole round, j is the first arrival, and every departure
  // came earlier.
  auto addsFirstTargetPin = [&](NetID e, const Move& m, int32_t j) {
    if (_net_slot[e] == kNoSlot) {
      const auto pins = hg.pins(e);
      const VertexID v = pins[0] == m.u ? pins[1] : pins[0];
      return blockBefore(v, j) != m.to;
    }
    const size_t reg = locate(e, m.to);
    return residue(e, m.to, reg) == 0 && arrivalOrInfinity(min_in[reg]) == j &&
           max_out[reg] < j;
  };

  // Phase 2: pure evaluation per move.
  parallelFor(size_t{0}, t, [&](size_t idx) {
    Move& m = moves[idx];
    const int32_t j = static_cast<int32_t>(idx + 1);
    Gain gain = 0;
    for (const NetID e : hg.incidentNets(m.u)) {
      const Weight w = hg.netWeight(e);
      if (removesLastSourcePin(e, m, j)) {
        gain += w;
      }
      if (addsFirstTargetPin(e, m, j)) {
        gain -= w;
      }
    }
    m.gain = gain;
  }, 128);

  if (probe_fn) {
    struct ProbesImpl final : Probes {
      std::function<bool(NetID, size_t)> src, tgt;
      bool removesLastSourcePin(NetID e, size_t j) const override { return src(e, j); }
      bool addsFirstTargetPin(NetID e, size_t j) const override { return tgt(e, j); }
    } probes;
    probes.src = [&](NetID e, size_t j) {
      HP_ASSERT(j >= 1 && j <= t);
      return removesLastSourcePin(e, moves[j - 1], static_cast<int32_t>(j));
    };
    probes.tgt = [&](NetID e, size_t j) {
      HP_ASSERT(j >= 1 && j <= t);
      return addsFirstTargetPin(e, moves[j - 1], static_cast<int32_t>(j));
    };
    probe_fn(probes);
  }

  // Back to the rest state.
  if (_used_dense) {
    for (const auto& local : tls_pairs) {
      parallelFor(size_t{0}, local.size(), [&](size_t i) {
        const size_t reg = static_cast<size_t>(local[i]);
        out_count[reg] = 0;
        in_count[reg] = 0;
        max_out[reg] = 0;
        min_in[reg] = 0;
      }, 2048);
    }
  } else {
    zeroInts(_scratch, 4 * stride);
    _sparse_keys.clear();
  }
  parallelFor(size_t{0}, t, [&](size_t idx) { _move_index[moves[idx].u] = 0; }, 512);
}

PrefixResult bestBalancedPrefix(const Hypergraph& hg, std::span<const Move> moves,
                                std::span<const Weight> start_block_weights,
                                Weight limit) {
  const size_t t = moves.size();
  const size_t k = start_block_weights.size();
  PrefixResult best;
  if (t == 0) {
    return best;
  }
  const size_t num_chunks = std::clamp<size_t>(t / 512, size_t{1}, size_t{128});
  auto chunkBegin = [&](size_t c) { return c * t / num_chunks; };

  std::vector<Gain> chunk_gain(num_chunks, 0);
  std::vector<Weight> chunk_delta(num_chunks * k, 0);
  parallelFor(size_t{0}, num_chunks, [&](size_t c) {
    Gain g = 0;
    Weight* delta = chunk_delta.data() + c * k;
    for (size_t j = chunkBegin(c); j < chunkBegin(c + 1); ++j) {
      const Move& m = moves[j];
      const Weight w = hg.vertexWeight(m.u);
      delta[m.from] -= w;
      delta[m.to] += w;
      g += m.gain;
    }
    chunk_gain[c] = g;
  }, 1);

  std::vector<Gain> gain_at(num_chunks);
  std::vector<Weight> weights_at(num_chunks * k);
  {
    Gain g = 0;
    std::vector<Weight> w(start_block_weights.begin(), start_block_weights.end());
    for (size_t c = 0; c < num_chunks; ++c) {
      gain_at[c] = g;
      std::copy(w.begin(), w.end(), weights_at.begin() + c * k);
      g += chunk_gain[c];
      for (size_t i = 0; i < k; ++i) {
        w[i] += chunk_delta[c * k + i];
      }
    }
  }

  std::vector<PrefixResult> chunk_best(num_chunks);
  parallelFor(size_t{0}, num_chunks, [&](size_t c) {
    std::vector<Weight> w(weights_at.begin() + c * k, weights_at.begin() + (c + 1) * k);
    int64_t overloaded = std::count_if(w.begin(), w.end(),
                                       [&](Weight bw) { return bw > limit; });
    auto adjust = [&](BlockID b, Weight d) {
      const bool was_over = w[b] > limit;
      w[b] += d;
      overloaded += static_cast<int64_t>(w[b] > limit) - static_cast<int64_t>(was_over);
    };
    Gain cumulative = gain_at[c];
    PrefixResult local;
    for (size_t j = chunkBegin(c); j < chunkBegin(c + 1); ++j) {
      const Move& m = moves[j];
      const Weight cw = hg.vertexWeight(m.u);
      adjust(m.from, -cw);
      adjust(m.to, cw);
      cumulative += m.gain;
      // Ties go to the longer prefix, and only improving prefixes count.
      if (overloaded == 0 && cumulative > 0 && cumulative >= local.gain) {
        local.length = j + 1;
        local.gain = cumulative;
      }
    }
    chunk_best[c] = local;
  }, 1);

  for (const PrefixResult& r : chunk_best) {
    if (r.gain > best.gain || (r.gain == best.gain && r.length > best.length)) {
      best = r;
    }
  }
  return best;
}

}  // namespace hyperpart
