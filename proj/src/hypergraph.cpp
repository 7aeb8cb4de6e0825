#include "hyperpart/hypergraph.hpp"

#include <algorithm>
#include <numeric>

#include "hyperpart/parallel.hpp"

namespace hyperpart {

Hypergraph Hypergraph::build(VertexID num_vertices,
                             std::vector<size_t> net_offsets,
                             std::vector<VertexID> pins,
                             std::vector<Weight> net_weights,
                             std::vector<Weight> vertex_weights,
                             BuildStats* stats) {
  HP_ASSERT(!net_offsets.empty() && net_offsets.back() == pins.size());
  const size_t num_input_nets = net_offsets.size() - 1;
  if (net_weights.empty()) {
    net_weights.assign(num_input_nets, 1);
  }
  if (vertex_weights.empty()) {
    vertex_weights.assign(num_vertices, 1);
  }
  HP_ASSERT(net_weights.size() == num_input_nets);
  HP_ASSERT(vertex_weights.size() == num_vertices);

  Hypergraph hg;
  BuildStats local_stats;

  // Sort and deduplicate each net in place, then compact surviving nets.
  hg._net_offsets.clear();
  hg._net_offsets.reserve(num_input_nets + 1);
  hg._net_offsets.push_back(0);
  size_t write_pos = 0;
  for (size_t e = 0; e < num_input_nets; ++e) {
    const size_t begin = net_offsets[e];
    const size_t end = net_offsets[e + 1];
    HP_ASSERT(begin <= end);
    std::sort(pins.begin() + begin, pins.begin() + end);
    size_t unique_end = begin;
    for (size_t i = begin; i < end; ++i) {
      HP_ASSERT(pins[i] < num_vertices, "pin " << pins[i] << " out of range");
      if (unique_end == begin || pins[i] != pins[unique_end - 1]) {
        pins[unique_end++] = pins[i];
      } else {
        ++local_stats.removed_duplicate_pins;
      }
    }
    const size_t size = unique_end - begin;
    if (size < 2) {
      ++local_stats.removed_single_pin_nets;
      continue;
    }
    HP_ASSERT(net_weights[e] > 0, "net weight must be positive");
    std::copy(pins.begin() + begin, pins.begin() + unique_end,
              pins.begin() + write_pos);
    write_pos += size;
    hg._net_offsets.push_back(write_pos);
    hg._net_weights.push_back(net_weights[e]);
    hg._max_net_size = std::max(hg._max_net_size, size);
  }
  pins.resize(write_pos);
  hg._pins = std::move(pins);

  hg._vertex_weights = std::move(vertex_weights);
  hg._total_weight = 0;
  for (Weight w : hg._vertex_weights) {
    HP_ASSERT(w > 0, "vertex weight must be positive");
    hg._total_weight += w;
  }

  // Incident nets via counting sort over the pin array.
  std::vector<size_t> degree(num_vertices + 1, 0);
  for (VertexID v : hg._pins) {
    ++degree[v];
  }
  hg._vertex_offsets.assign(num_vertices + 1, 0);
  for (VertexID v = 0; v < num_vertices; ++v) {
    hg._vertex_offsets[v + 1] = hg._vertex_offsets[v] + degree[v];
  }
  hg._incident_nets.resize(hg._pins.size());
  std::vector<size_t> cursor(hg._vertex_offsets.begin(), hg._vertex_offsets.end() - 1);
  const NetID num_nets = hg.numNets();
  for (NetID e = 0; e < num_nets; ++e) {
    for (size_t i = hg._net_offsets[e]; i < hg._net_offsets[e + 1]; ++i) {
      hg._incident_nets[cursor[hg._pins[i]]++] = e;
    }
  }

  if (stats != nullptr) {
    *stats = local_stats;
  }
  return hg;
}

Hypergraph Hypergraph::fromNetLists(VertexID num_vertices,
                                    const std::vector<std::vector<VertexID>>& nets,
                                    std::vector<Weight> net_weights,
                                    std::vector<Weight> vertex_weights,
                                    BuildStats* stats) {
  std::vector<size_t> offsets;
  offsets.reserve(nets.size() + 1);
  offsets.push_back(0);
  std::vector<VertexID> pins;
  for (const auto& net : nets) {
    pins.insert(pins.end(), net.begin(), net.end());
    offsets.push_back(pins.size());
  }
  return build(num_vertices, std::move(offsets), std::move(pins),
               std::move(net_weights), std::move(vertex_weights), stats);
}

}  // namespace hyperpart
