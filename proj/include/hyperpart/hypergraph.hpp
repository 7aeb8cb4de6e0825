#pragma once

#include <span>
#include <vector>

#include "hyperpart/assertions.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Static hypergraph in CSR form, adjacency in both directions (net -> pins,
// vertex -> incident nets). Pins of every net are sorted and duplicate-free;
// nets with fewer than two pins are removed during construction.
class Hypergraph {
 public:
  struct BuildStats {
    size_t removed_single_pin_nets = 0;
    size_t removed_duplicate_pins = 0;
  };

  Hypergraph() = default;

  // Primary builder. `net_offsets` has num_nets + 1 entries indexing into
  // `pins`. Missing weight vectors default to unit weights.
  static Hypergraph build(VertexID num_vertices,
                          std::vector<size_t> net_offsets,
                          std::vector<VertexID> pins,
                          std::vector<Weight> net_weights = {},
                          std::vector<Weight> vertex_weights = {},
                          BuildStats* stats = nullptr);

  // Convenience for tests and small fixtures.
  static Hypergraph fromNetLists(VertexID num_vertices,
                                 const std::vector<std::vector<VertexID>>& nets,
                                 std::vector<Weight> net_weights = {},
                                 std::vector<Weight> vertex_weights = {},
                                 BuildStats* stats = nullptr);

  VertexID numVertices() const { return static_cast<VertexID>(_vertex_weights.size()); }
  NetID numNets() const { return static_cast<NetID>(_net_weights.size()); }
  size_t numPins() const { return _pins.size(); }

  std::span<const VertexID> pins(NetID e) const {
    HP_ASSERT(e < numNets());
    return {_pins.data() + _net_offsets[e], _net_offsets[e + 1] - _net_offsets[e]};
  }

  std::span<const NetID> incidentNets(VertexID u) const {
    HP_ASSERT(u < numVertices());
    return {_incident_nets.data() + _vertex_offsets[u],
            _vertex_offsets[u + 1] - _vertex_offsets[u]};
  }

  size_t netSize(NetID e) const {
    HP_ASSERT(e < numNets());
    return _net_offsets[e + 1] - _net_offsets[e];
  }

  size_t degree(VertexID u) const {
    HP_ASSERT(u < numVertices());
    return _vertex_offsets[u + 1] - _vertex_offsets[u];
  }

  Weight vertexWeight(VertexID u) const {
    HP_ASSERT(u < numVertices());
    return _vertex_weights[u];
  }

  Weight netWeight(NetID e) const {
    HP_ASSERT(e < numNets());
    return _net_weights[e];
  }

  Weight totalWeight() const { return _total_weight; }
  size_t maxNetSize() const { return _max_net_size; }

  // Sum of incident net weights, the upper bound b(u) <= W(u) used by gain
  // computations.
  Weight incidentWeight(VertexID u) const {
    Weight w = 0;
    for (NetID e : incidentNets(u)) {
      w += netWeight(e);
    }
    return w;
  }

 private:
  std::vector<size_t> _net_offsets{0};
  std::vector<VertexID> _pins;
  std::vector<size_t> _vertex_offsets{0};
  std::vector<NetID> _incident_nets;
  std::vector<Weight> _vertex_weights;
  std::vector<Weight> _net_weights;
  Weight _total_weight = 0;
  size_t _max_net_size = 0;
};

}  // namespace hyperpart
