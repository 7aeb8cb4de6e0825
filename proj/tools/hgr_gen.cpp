#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyperpart/hypergraph.hpp"
#include "hyperpart/hypergraph_io.hpp"
#include "hyperpart/random.hpp"
#include "hyperpart/types.hpp"

namespace {

using namespace hyperpart;

// Draws `count` distinct vertices; net sizes stay tiny compared to n, so
// rejection sampling terminates quickly.
std::vector<VertexID> distinctPins(Rng& rng, VertexID n, size_t count) {
  std::vector<VertexID> pins;
  pins.reserve(count);
  while (pins.size() < count) {
    const VertexID v = static_cast<VertexID>(rng.nextBounded(n));
    if (std::find(pins.begin(), pins.end(), v) == pins.end()) {
      pins.push_back(v);
    }
  }
  return pins;
}

std::vector<Weight> randomWeights(Rng& rng, size_t count, uint64_t max_extra) {
  std::vector<Weight> weights(count);
  for (Weight& w : weights) {
    w = 1 + static_cast<Weight>(rng.nextBounded(max_extra));
  }
  return weights;
}

Hypergraph uniformRandom(Rng& rng, VertexID n, NetID m, size_t min_size,
                         size_t max_size, bool weighted) {
  std::vector<size_t> offsets{0};
  std::vector<VertexID> pins;
  for (NetID e = 0; e < m; ++e) {
    const size_t size =
        min_size + rng.nextBounded(max_size - min_size + 1);
    const std::vector<VertexID> net = distinctPins(rng, n, size);
    pins.insert(pins.end(), net.begin(), net.end());
    offsets.push_back(pins.size());
  }
  std::vector<Weight> net_weights =
      weighted ? randomWeights(rng, m, 9) : std::vector<Weight>{};
  std::vector<Weight> vertex_weights =
      weighted ? randomWeights(rng, n, 3) : std::vector<Weight>{};
  return Hypergraph::build(n, std::move(offsets), std::move(pins),
                           std::move(net_weights), std::move(vertex_weights));
}

// Net sizes drawn from a heavy-tailed distribution: most nets are small,
// a few span up to max_size pins.
Hypergraph powerTail(Rng& rng, VertexID n, NetID m, size_t max_size) {
  std::vector<size_t> offsets{0};
  std::vector<VertexID> pins;
  for (NetID e = 0; e < m; ++e) {
    const double u = rng.nextDouble();
    const size_t size =
        2 + static_cast<size_t>(static_cast<double>(max_size - 2) * u * u * u);
    const std::vector<VertexID> net = distinctPins(rng, n, size);
    pins.insert(pins.end(), net.begin(), net.end());
    offsets.push_back(pins.size());
  }
  return Hypergraph::build(n, std::move(offsets), std::move(pins));
}

// Contiguous vertex ranges form planted communities; each net draws a home
// community and keeps most pins inside it.
Hypergraph plantedCommunities(Rng& rng, VertexID n, NetID m,
                              uint32_t num_communities, size_t min_size,
                              size_t max_size) {
  const VertexID span = (n + num_communities - 1) / num_communities;
  std::vector<size_t> offsets{0};
  std::vector<VertexID> pins;
  for (NetID e = 0; e < m; ++e) {
    const uint32_t home = static_cast<uint32_t>(rng.nextBounded(num_communities));
    const VertexID lo = home * span;
    const VertexID hi = std::min<VertexID>(n, lo + span);
    const size_t size = min_size + rng.nextBounded(max_size - min_size + 1);
    std::vector<VertexID> net;
    while (net.size() < size) {
      const bool internal = rng.nextBounded(10) < 9;
      const VertexID v =
          internal ? lo + static_cast<VertexID>(rng.nextBounded(hi - lo))
                   : static_cast<VertexID>(rng.nextBounded(n));
      if (std::find(net.begin(), net.end(), v) == net.end()) {
        net.push_back(v);
      }
    }
    pins.insert(pins.end(), net.begin(), net.end());
    offsets.push_back(pins.size());
  }
  return Hypergraph::build(n, std::move(offsets), std::move(pins));
}

// Mesh with sliding windows of three cells per row and per column; its
// planar structure gives partitioners clean small cuts to find.
Hypergraph gridMesh(VertexID rows, VertexID cols) {
  std::vector<std::vector<VertexID>> nets;
  const auto at = [cols](VertexID r, VertexID c) { return r * cols + c; };
  for (VertexID r = 0; r < rows; ++r) {
    for (VertexID c = 0; c + 2 < cols; ++c) {
      nets.push_back({at(r, c), at(r, c + 1), at(r, c + 2)});
    }
  }
  for (VertexID c = 0; c < cols; ++c) {
    for (VertexID r = 0; r + 2 < rows; ++r) {
      nets.push_back({at(r, c), at(r + 1, c), at(r + 2, c)});
    }
  }
  return Hypergraph::fromNetLists(rows * cols, nets);
}

Hypergraph path(VertexID n) {
  std::vector<std::vector<VertexID>> nets;
  for (VertexID v = 0; v + 1 < n; ++v) {
    nets.push_back({v, static_cast<VertexID>(v + 1)});
  }
  return Hypergraph::fromNetLists(n, nets);
}

struct Recipe {
  std::string name;
  bool large;
  bool weighted;
  std::function<Hypergraph(Rng&)> make;
};

// FNV-1a; std::hash is not pinned across standard libraries and the corpus
// checksums must be.
uint64_t nameHash(const std::string& name) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : name) {
    h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  }
  return h;
}

std::vector<Recipe> corpusRecipes() {
  return {
      {"path_chain", false, false, [](Rng&) { return path(600); }},
      {"rand_small", false, false,
       [](Rng& r) { return uniformRandom(r, 400, 500, 2, 6, false); }},
      {"rand_weighted", false, true,
       [](Rng& r) { return uniformRandom(r, 800, 1200, 2, 8, true); }},
      {"grid_mesh", false, false, [](Rng&) { return gridMesh(40, 40); }},
      {"communities_8", false, false,
       [](Rng& r) { return plantedCommunities(r, 3000, 4500, 8, 2, 10); }},
      {"power_tail", false, false,
       [](Rng& r) { return powerTail(r, 5000, 5000, 120); }},
      {"rand_medium", false, false,
       [](Rng& r) { return uniformRandom(r, 20000, 30000, 2, 6, false); }},
      {"rand_large", true, false,
       [](Rng& r) { return uniformRandom(r, 80000, 140000, 2, 8, false); }},
      {"huge_uniform", true, false,
       [](Rng& r) { return uniformRandom(r, 200000, 300000, 2, 8, false); }},
      {"huge_communities", true, false,
       [](Rng& r) { return plantedCommunities(r, 150000, 280000, 64, 2, 7); }},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic benchmark corpus generator"};
  std::string out_dir;
  std::string subset = "all";
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--subset", subset, "Which instances: small, large, all")
      ->check(CLI::IsMember({"small", "large", "all"}));
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out_dir);
  for (const Recipe& recipe : corpusRecipes()) {
    if ((subset == "small" && recipe.large) ||
        (subset == "large" && !recipe.large)) {
      continue;
    }
    Rng rng(hashPair(0x5eed, nameHash(recipe.name)));
    const Hypergraph hg = recipe.make(rng);
    const std::string file = out_dir + "/" + recipe.name + ".hgr";
    std::ofstream out(file);
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", file.c_str());
      return 1;
    }
    hyperpart::io::writeHmetis(hg, out, recipe.weighted, recipe.weighted);
    std::printf("%s: %u vertices, %u nets, %zu pins\n", file.c_str(),
                hg.numVertices(), hg.numNets(), hg.numPins());
  }
  return 0;
}
