#include "hyperpart/partitioned_hypergraph.hpp"

#include <sstream>

#include <tbb/enumerable_thread_specific.h>

#include "hyperpart/gain_cache.hpp"

namespace hyperpart {

PartitionedHypergraph::PartitionedHypergraph(const Hypergraph& hg, BlockID k)
    : _hg(&hg), _k(k) {
  HP_ASSERT(k >= 1);
  // Entry width fixed per hypergraph: enough bits for the largest pin count.
  // Entries of one net never share a word with another net, so per-net locks
  // cover every read-modify-write.
  _bits_per_entry =
      std::max<uint32_t>(1, std::bit_width(std::max<uint64_t>(hg.maxNetSize(), 1)));
  _entries_per_word = 64 / _bits_per_entry;
  _entry_mask = _bits_per_entry == 64 ? ~uint64_t{0} : ((uint64_t{1} << _bits_per_entry) - 1);
  _phi_words_per_net =
      (static_cast<uint32_t>(k) + _entries_per_word - 1) / _entries_per_word;
  _lambda_words_per_net = (static_cast<uint32_t>(k) + 63) / 64;

  _part.assign(hg.numVertices(), AtomicWrapper<BlockID>(kInvalidBlock));
  _block_weights.assign(k, AtomicWrapper<Weight>(0));
  _pin_counts.assign(static_cast<size_t>(hg.numNets()) * _phi_words_per_net,
                     AtomicWrapper<uint64_t>(0));
  _connectivity_sets.assign(static_cast<size_t>(hg.numNets()) * _lambda_words_per_net,
                            AtomicWrapper<uint64_t>(0));
  _net_locks = std::make_unique<SpinLock[]>(hg.numNets());
}

void PartitionedHypergraph::assignPartition(std::span<const BlockID> part) {
  HP_ASSERT(part.size() == _hg->numVertices());
  parallelFor(0, part.size(), [&](size_t u) {
    setOnlyVertexPart(static_cast<VertexID>(u), part[u]);
  });
  initializePinCounts();
}

void PartitionedHypergraph::initializePinCounts() {
  const Hypergraph& hg = *_hg;

  parallelFor(0, _pin_counts.size(), [&](size_t i) {
    _pin_counts[i].store(0, std::memory_order_relaxed);
  });
  parallelFor(0, _connectivity_sets.size(), [&](size_t i) {
    _connectivity_sets[i].store(0, std::memory_order_relaxed);
  });
  for (BlockID b = 0; b < _k; ++b) {
    _block_weights[b].store(0, std::memory_order_relaxed);
  }

  struct Scratch {
    std::vector<int32_t> count;
    std::vector<BlockID> touched;
  };
  tbb::enumerable_thread_specific<Scratch> scratch;

  parallelFor(0, hg.numNets(), [&](size_t e_idx) {
    const NetID e = static_cast<NetID>(e_idx);
    Scratch& s = scratch.local();
    if (s.count.empty()) {
      s.count.assign(_k, 0);
    }
    for (VertexID v : hg.pins(e)) {
      const BlockID b = partOf(v);
      HP_ASSERT(b != kInvalidBlock, "vertex " << v << " unassigned");
      if (s.count[b]++ == 0) {
        s.touched.push_back(b);
      }
    }
    for (BlockID b : s.touched) {
      addToPinCount(e, b, s.count[b]);
      setConnectivityBit(e, b, true);
      s.count[b] = 0;
    }
    s.touched.clear();
  }, 256);

  parallelFor(0, hg.numVertices(), [&](size_t u) {
    _block_weights[partOf(static_cast<VertexID>(u))].fetch_add(
        hg.vertexWeight(static_cast<VertexID>(u)), std::memory_order_relaxed);
  });
}

int32_t PartitionedHypergraph::addToPinCount(NetID e, BlockID b, int32_t delta) {
  auto& word = _pin_counts[e * _phi_words_per_net +
                           static_cast<uint32_t>(b) / _entries_per_word];
  const uint32_t shift = (static_cast<uint32_t>(b) % _entries_per_word) * _bits_per_entry;
  const uint64_t old_word = word.load(std::memory_order_relaxed);
  const int32_t value =
      static_cast<int32_t>((old_word >> shift) & _entry_mask) + delta;
  HP_ASSERT(value >= 0 && static_cast<uint64_t>(value) <= _entry_mask,
            "pin count " << value << " out of packed range");
  word.store((old_word & ~(_entry_mask << shift)) |
                 (static_cast<uint64_t>(value) << shift),
             std::memory_order_relaxed);
  return value;
}

void PartitionedHypergraph::setConnectivityBit(NetID e, BlockID b, bool value) {
  auto& word = _connectivity_sets[e * _lambda_words_per_net + static_cast<uint32_t>(b) / 64];
  const uint64_t mask = uint64_t{1} << (static_cast<uint32_t>(b) % 64);
  const uint64_t old_word = word.load(std::memory_order_relaxed);
  word.store(value ? (old_word | mask) : (old_word & ~mask), std::memory_order_relaxed);
}

Gain PartitionedHypergraph::applyMoveReserved(VertexID u, BlockID to, GainCache* cache) {
  const BlockID from = _part[u].load(std::memory_order_relaxed);
  HP_ASSERT(from != kInvalidBlock && from != to && to >= 0 && to < _k);
  _part[u].store(to, std::memory_order_relaxed);
  _block_weights[from].fetch_sub(_hg->vertexWeight(u), std::memory_order_relaxed);

  Gain attributed = 0;
  for (NetID e : _hg->incidentNets(u)) {
    _net_locks[e].lock();
    const int32_t phi_from = decPinCount(e, from);
    const int32_t phi_to = incPinCount(e, to);
    const bool source_empty = phi_from == 0;
    const bool source_single = phi_from == 1;
    const bool target_first = phi_to == 1;
    const bool target_second = phi_to == 2;
    if (source_empty) {
      setConnectivityBit(e, from, false);
    }
    if (target_first) {
      setConnectivityBit(e, to, true);
    }
    _net_locks[e].unlock();

    const Weight w = _hg->netWeight(e);
    if (source_empty) {
      attributed += w;
    }
    if (target_first) {
      attributed -= w;
    }
    if (cache != nullptr) {
      cache->applyDeltaRules(*this, e, from, to, source_empty, source_single,
                             target_first, target_second);
    }
  }
  return attributed;
}

std::optional<Gain> PartitionedHypergraph::tryMove(VertexID u, BlockID to, Weight limit,
                                                   GainCache* cache) {
  if (partOf(u) == to) {
    return std::nullopt;
  }
  const Weight w = _hg->vertexWeight(u);
  if (!tryReserveWeight(to, w, limit)) {
    return std::nullopt;
  }
  return applyMoveReserved(u, to, cache);
}

std::vector<BlockID> PartitionedHypergraph::extractPartition() const {
  std::vector<BlockID> part(_hg->numVertices());
  for (VertexID u = 0; u < _hg->numVertices(); ++u) {
    part[u] = partOf(u);
  }
  return part;
}

bool PartitionedHypergraph::verifyBookkeeping(std::string* what) const {
  const Hypergraph& hg = *_hg;
  auto fail = [&](const std::string& msg) {
    if (what != nullptr) {
      *what = msg;
    }
    return false;
  };

  std::vector<Weight> weights(_k, 0);
  for (VertexID u = 0; u < hg.numVertices(); ++u) {
    const BlockID b = partOf(u);
    if (b < 0 || b >= _k) {
      std::ostringstream oss;
      oss << "vertex " << u << " has invalid block " << b;
      return fail(oss.str());
    }
    weights[b] += hg.vertexWeight(u);
  }
  for (BlockID b = 0; b < _k; ++b) {
    if (weights[b] != blockWeight(b)) {
      std::ostringstream oss;
      oss << "block " << b << " weight " << blockWeight(b) << ", recounted "
          << weights[b];
      return fail(oss.str());
    }
  }

  std::vector<int32_t> count(_k, 0);
  for (NetID e = 0; e < hg.numNets(); ++e) {
    std::fill(count.begin(), count.end(), 0);
    for (VertexID v : hg.pins(e)) {
      ++count[partOf(v)];
    }
    for (BlockID b = 0; b < _k; ++b) {
      if (pinCountInBlock(e, b) != count[b]) {
        std::ostringstream oss;
        oss << "net " << e << " block " << b << ": pin count "
            << pinCountInBlock(e, b) << ", recounted " << count[b];
        return fail(oss.str());
      }
      const uint64_t word =
          _connectivity_sets[e * _lambda_words_per_net + static_cast<uint32_t>(b) / 64]
              .load(std::memory_order_relaxed);
      const bool bit = (word >> (static_cast<uint32_t>(b) % 64)) & 1;
      if (bit != (count[b] > 0)) {
        std::ostringstream oss;
        oss << "net " << e << " block " << b << ": connectivity bit " << bit
            << ", pin count " << count[b];
        return fail(oss.str());
      }
    }
  }
  return true;
}

}  // namespace hyperpart
