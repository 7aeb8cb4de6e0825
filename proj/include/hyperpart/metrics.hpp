#pragma once

#include "hyperpart/partitioned_hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart::metrics {

// Connectivity objective: sum over nets of (lambda(e) - 1) * w(e).
Gain connectivityMetric(const PartitionedHypergraph& phg);

// ceil(total / k), the perfect block weight the balance constraint is
// relative to.
inline Weight perfectBlockWeight(Weight total, BlockID k) {
  return (total + k - 1) / k;
}

// Largest admissible block weight (1 + eps) * ceil(total / k), evaluated as
// an integer threshold with a tiny guard against representation error in the
// product.
inline Weight maxBlockWeight(Weight total, BlockID k, double eps) {
  const double bound = (1.0 + eps) * static_cast<double>(perfectBlockWeight(total, k));
  return static_cast<Weight>(bound + 1e-9);
}

// max_i weight(i) / ceil(total / k) - 1; 0 means perfectly balanced.
double imbalance(const PartitionedHypergraph& phg);

bool isBalanced(const PartitionedHypergraph& phg, double eps);

}  // namespace hyperpart::metrics
