#pragma once

#include <vector>

#include "predmkt/models.hpp"
#include "predmkt/types.hpp"

namespace predmkt::combiner {

/// A set of purchased models. May be empty (the outside option).
struct Coalition {
  std::vector<int> members;             // distinct firm indices
  std::vector<ModelSummary> summaries;  // one per member

  Coalition() = default;
  Coalition(std::vector<int> ids, std::vector<ModelSummary> models);

  int size() const { return static_cast<int>(members.size()); }
  bool empty() const { return members.empty(); }
};

/// Nonnegative weights summing to one, one per coalition member.
struct WeightVector {
  Vector weights;

  WeightVector() = default;
  explicit WeightVector(Vector w);
};

/// sigma2 + w'Gw + sum_i w_i^2 V_i, with G the Gram matrix of bias
/// vectors. Variances enter only on the diagonal because each firm trains
/// on an independent dataset.
Real loss_of_weights(const Coalition& coalition, const WeightVector& w, Real sigma2);

struct OptimalWeights {
  WeightVector weights;
  Real loss = 0.0;
};

/// Exact simplex minimizer of loss_of_weights, by KKT enumeration over
/// support subsets. Exact ties are broken toward the minimum-norm weight
/// vector. Coalition size is limited by `cap`.
OptimalWeights optimal_weights(const Coalition& coalition, Real sigma2, int cap = kCoalitionCap);

/// U(E, M): outside option for the empty coalition, otherwise the negative
/// of the optimally weighted loss.
Real coalition_utility(const Coalition& coalition, const MarketConfig& cfg);

/// Gram matrix of bias inner products plus the variance diagonal; the
/// quadratic form of the combination loss.
Matrix loss_matrix(const Coalition& coalition);

}  // namespace predmkt::combiner
