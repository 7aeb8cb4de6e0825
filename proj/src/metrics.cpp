#include "hyperpart/metrics.hpp"

#include <tbb/blocked_range.h>
#include <tbb/parallel_reduce.h>

namespace hyperpart::metrics {

Gain connectivityMetric(const PartitionedHypergraph& phg) {
  const Hypergraph& hg = phg.hypergraph();
  return tbb::parallel_reduce(
      tbb::blocked_range<NetID>(0, hg.numNets(), 2048), Gain{0},
      [&](const tbb::blocked_range<NetID>& range, Gain sum) {
        for (NetID e = range.begin(); e != range.end(); ++e) {
          sum += static_cast<Gain>(phg.connectivity(e) - 1) * hg.netWeight(e);
        }
        return sum;
      },
      std::plus<Gain>());
}

double imbalance(const PartitionedHypergraph& phg) {
  Weight max_weight = 0;
  for (BlockID b = 0; b < phg.k(); ++b) {
    max_weight = std::max(max_weight, phg.blockWeight(b));
  }
  return static_cast<double>(max_weight) /
             static_cast<double>(perfectBlockWeight(phg.totalWeight(), phg.k())) -
         1.0;
}

bool isBalanced(const PartitionedHypergraph& phg, double eps) {
  const Weight limit = maxBlockWeight(phg.totalWeight(), phg.k(), eps);
  for (BlockID b = 0; b < phg.k(); ++b) {
    if (phg.blockWeight(b) > limit) {
      return false;
    }
  }
  return true;
}

}  // namespace hyperpart::metrics
