#include "predmkt/combiner.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace predmkt::combiner {

namespace {
constexpr Real kSimplexTol = 1e-12;
constexpr Real kFeasTol = 1e-12;
}  // namespace

Coalition::Coalition(std::vector<int> ids, std::vector<ModelSummary> models)
    : members(std::move(ids)), summaries(std::move(models)) {
  if (members.size() != summaries.size())
    throw std::invalid_argument("Coalition: members and summaries must match");
  std::set<int> unique(members.begin(), members.end());
  if (unique.size() != members.size())
    throw std::invalid_argument("Coalition: duplicate firm index");
  for (std::size_t i = 1; i < summaries.size(); ++i)
    if (summaries[i].bias_vec.size() != summaries[0].bias_vec.size())
      throw std::invalid_argument("Coalition: bias vectors from different spaces");
}

WeightVector::WeightVector(Vector w) : weights(std::move(w)) {
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights(i) < -kSimplexTol)
      throw std::invalid_argument("WeightVector: weights must be nonnegative");
  if (weights.size() > 0 && std::abs(weights.sum() - 1.0) > kSimplexTol)
    throw std::invalid_argument("WeightVector: weights must sum to one");
}

Matrix loss_matrix(const Coalition& coalition) {
  const int n = coalition.size();
  Matrix q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      q(i, j) = bias_inner(coalition.summaries[i], coalition.summaries[j]);
      q(j, i) = q(i, j);
    }
    q(i, i) += coalition.summaries[i].variance;
  }
  return q;
}

Real loss_of_weights(const Coalition& coalition, const WeightVector& w, Real sigma2) {
  if (w.weights.size() != coalition.size())
    throw std::invalid_argument("loss_of_weights: weight/coalition size mismatch");
  if (coalition.empty()) throw std::invalid_argument("loss_of_weights: empty coalition");
  const Matrix q = loss_matrix(coalition);
  return sigma2 + w.weights.dot(q * w.weights);
}

OptimalWeights optimal_weights(const Coalition& coalition, Real sigma2, int cap) {
  const int n = coalition.size();
  if (n == 0) throw std::invalid_argument("optimal_weights: empty coalition");
  if (n > cap) throw std::invalid_argument("optimal_weights: coalition exceeds cap");

  const Matrix q = loss_matrix(coalition);

  Vector best;
  Real best_obj = std::numeric_limits<Real>::infinity();
  Real best_norm2 = std::numeric_limits<Real>::infinity();
  bool have_kkt_candidate = false;

  auto consider = [&](const Vector& w, Real obj, bool kkt_ok) {
    // KKT-verified candidates take precedence; among equals prefer lower
    // objective, then smaller norm.
    if (kkt_ok && !have_kkt_candidate) {
      have_kkt_candidate = true;
      best = w;
      best_obj = obj;
      best_norm2 = w.squaredNorm();
      return;
    }
    if (kkt_ok != have_kkt_candidate) return;
    const Real norm2 = w.squaredNorm();
    if (obj < best_obj || (obj == best_obj && norm2 < best_norm2)) {
      best = w;
      best_obj = obj;
      best_norm2 = norm2;
    }
  };

  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> support;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) support.push_back(i);
    const int m = static_cast<int>(support.size());

    Vector w_s;
    if (m == 1) {
      w_s = Vector::Ones(1);
    } else {
      Matrix q_s(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) q_s(a, b) = q(support[a], support[b]);

      // Null-space parametrization of {w : sum w = 1}: w = u0 + Z v with
      // Z an orthonormal basis of 1^perp, so the minimum-norm v gives the
      // minimum-norm w on ties (u0 is orthogonal to range(Z)).
      Vector u0 = Vector::Constant(m, 1.0 / m);
      Eigen::HouseholderQR<Matrix> qr(Vector::Ones(m));
      Matrix full = qr.householderQ();
      Matrix z = full.rightCols(m - 1);
      Matrix reduced = z.transpose() * q_s * z;
      Vector rhs = -z.transpose() * (q_s * u0);
      Vector v = reduced.completeOrthogonalDecomposition().solve(rhs);
      w_s = u0 + z * v;
    }

    bool feasible = true;
    for (int a = 0; a < m; ++a)
      if (w_s(a) < -kFeasTol) feasible = false;
    if (!feasible) continue;

    Vector w = Vector::Zero(n);
    for (int a = 0; a < m; ++a) w(support[a]) = std::max<Real>(w_s(a), 0.0);
    w /= w.sum();

    // Multipliers of the inactive nonnegativity constraints: grad_i >= lambda,
    // where lambda = w'grad is the common gradient value on the support.
    const Vector grad = 2.0 * (q * w);
    const Real lambda = w.dot(grad);
    const Real scale = 1.0 + grad.cwiseAbs().maxCoeff();
    bool kkt_ok = true;
    for (int i = 0; i < n; ++i)
      if (!(mask & (1u << i)) && grad(i) < lambda - 1e-9 * scale) kkt_ok = false;

    consider(w, w.dot(q * w), kkt_ok);
  }

  OptimalWeights out;
  out.weights = WeightVector(best);
  out.loss = sigma2 + best_obj;
  return out;
}

Real coalition_utility(const Coalition& coalition, const MarketConfig& cfg) {
  if (coalition.empty()) return cfg.outside_option;
  return -optimal_weights(coalition, cfg.sigma2).loss;
}

}  // namespace predmkt::combiner
