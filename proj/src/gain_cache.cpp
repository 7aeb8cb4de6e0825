#include "hyperpart/gain_cache.hpp"

#include <sstream>

#include <tbb/enumerable_thread_specific.h>

#include "hyperpart/parallel.hpp"

namespace hyperpart {

void GainCache::initialize(const PartitionedHypergraph& phg, MemoryPool* pool) {
  const Hypergraph& hg = phg.hypergraph();
  const size_t n = hg.numVertices();
  _k = phg.k();

  if (pool != nullptr) {
    _pooled_benefit = pool->borrowArray<Gain>(n);
    _pooled_penalty = pool->borrowArray<Gain>(n * static_cast<size_t>(_k));
    _benefit = _pooled_benefit.data();
    _penalty = _pooled_penalty.data();
  } else {
    _owned_benefit.assign(n, 0);
    _owned_penalty.assign(n * static_cast<size_t>(_k), 0);
    _benefit = _owned_benefit.data();
    _penalty = _owned_penalty.data();
  }

  // Per-vertex accumulation of w({e in I(u) : block touches e}) through the
  // connectivity sets; penalty(u, i) = W(u) - acc[i].
  struct Scratch {
    std::vector<Gain> acc;
    std::vector<BlockID> touched;
  };
  tbb::enumerable_thread_specific<Scratch> scratch;

  parallelFor(0, n, [&](size_t u) {
    Scratch& s = scratch.local();
    if (s.acc.empty()) {
      s.acc.assign(_k, 0);
    }
    const BlockID pu = phg.partOf(u);
    Gain total = 0;
    Gain b = 0;
    for (NetID e : hg.incidentNets(static_cast<VertexID>(u))) {
      const Weight w = hg.netWeight(e);
      total += w;
      if (phg.pinCountInBlock(e, pu) == 1) {
        b += w;
      }
      phg.forBlocksOf(e, [&](BlockID block) {
        if (s.acc[block] == 0) {
          s.touched.push_back(block);
        }
        s.acc[block] += w;
      });
    }
    _benefit[u] = b;
    Gain* row = _penalty + u * static_cast<size_t>(_k);
    for (BlockID i = 0; i < _k; ++i) {
      row[i] = total;
    }
    for (BlockID i : s.touched) {
      row[i] = total - s.acc[i];
      s.acc[i] = 0;
    }
    s.touched.clear();
  });
}

void GainCache::release() {
  _benefit = nullptr;
  _penalty = nullptr;
  _owned_benefit.clear();
  _owned_benefit.shrink_to_fit();
  _owned_penalty.clear();
  _owned_penalty.shrink_to_fit();
  _pooled_benefit = {};
  _pooled_penalty = {};
  _k = 0;
}

void GainCache::applyDeltaRules(const PartitionedHypergraph& phg, NetID e,
                                BlockID from, BlockID to, bool source_empty,
                                bool source_single, bool target_first,
                                bool target_second) {
  const Hypergraph& hg = phg.hypergraph();
  const Weight w = hg.netWeight(e);
  if (!(source_empty | source_single | target_first | target_second)) {
    return;
  }
  for (VertexID v : hg.pins(e)) {
    if (source_empty) {
      addPenalty(v, from, w);
    }
    if (target_first) {
      addPenalty(v, to, -w);
    }
    if (source_single && phg.partOf(v) == from) {
      addBenefit(v, w);
    }
    if (target_second && phg.partOf(v) == to) {
      addBenefit(v, -w);
    }
  }
}

void GainCache::recomputeBenefits(const PartitionedHypergraph& phg,
                                  std::span<const VertexID> vertices) {
  parallelFor(0, vertices.size(), [&](size_t i) {
    const VertexID u = vertices[i];
    std::atomic_ref<Gain>(_benefit[u])
        .store(benefitFromScratch(phg, u), std::memory_order_relaxed);
  }, 64);
}

Gain GainCache::benefitFromScratch(const PartitionedHypergraph& phg, VertexID u) {
  const Hypergraph& hg = phg.hypergraph();
  const BlockID pu = phg.partOf(u);
  Gain b = 0;
  for (NetID e : hg.incidentNets(u)) {
    if (phg.pinCountInBlock(e, pu) == 1) {
      b += hg.netWeight(e);
    }
  }
  return b;
}

Gain GainCache::penaltyFromScratch(const PartitionedHypergraph& phg, VertexID u,
                                   BlockID to) {
  const Hypergraph& hg = phg.hypergraph();
  Gain p = 0;
  for (NetID e : hg.incidentNets(u)) {
    if (phg.pinCountInBlock(e, to) == 0) {
      p += hg.netWeight(e);
    }
  }
  return p;
}

bool GainCache::verifyAgainstScratch(const PartitionedHypergraph& phg,
                                     std::string* what) const {
  const VertexID n = phg.hypergraph().numVertices();
  for (VertexID u = 0; u < n; ++u) {
    const Gain expected_benefit = benefitFromScratch(phg, u);
    if (benefit(u) != expected_benefit) {
      if (what != nullptr) {
        std::ostringstream oss;
        oss << "benefit(" << u << ") = " << benefit(u) << ", expected "
            << expected_benefit;
        *what = oss.str();
      }
      return false;
    }
    for (BlockID i = 0; i < _k; ++i) {
      const Gain expected_penalty = penaltyFromScratch(phg, u, i);
      if (penalty(u, i) != expected_penalty) {
        if (what != nullptr) {
          std::ostringstream oss;
          oss << "penalty(" << u << ", " << i << ") = " << penalty(u, i)
              << ", expected " << expected_penalty;
          *what = oss.str();
        }
        return false;
      }
    }
  }
  return true;
}

}  // namespace hyperpart
