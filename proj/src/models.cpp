#include "predmkt/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace predmkt {

ModelSummary::ModelSummary(Vector bias, Real var, Real model_cost, std::string name)
    : bias_vec(std::move(bias)), variance(var), cost(model_cost), label(std::move(name)) {
  if (!(variance >= 0.0)) throw std::invalid_argument("ModelSummary: variance must be >= 0");
  if (!(cost > 0.0)) throw std::invalid_argument("ModelSummary: cost must be > 0");
}

Real bias_inner(const ModelSummary& a, const ModelSummary& b) {
  if (a.bias_vec.size() != b.bias_vec.size())
    throw std::invalid_argument("bias_inner: bias vectors from different spaces");
  return a.bias_vec.dot(b.bias_vec);
}

MarketConfig::MarketConfig(Real sigma2_, Real outside_option_, int n_firms_)
    : sigma2(sigma2_), outside_option(outside_option_), n_firms(n_firms_) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("MarketConfig: sigma2 must be >= 0");
  if (!(outside_option < 0.0)) throw std::invalid_argument("MarketConfig: outside option must be < 0");
  if (n_firms < 1) throw std::invalid_argument("MarketConfig: need at least one firm");
}

ModelSummary forecast_summary(const ForecastSpec& spec) {
  if (!(spec.r >= 0.0 && spec.r <= 1.0))
    throw std::invalid_argument("forecast_summary: r must lie in [0,1]");
  if (!(spec.prior_var >= 0.0) || !(spec.noise_var >= 0.0))
    throw std::invalid_argument("forecast_summary: variances must be >= 0");
  Vector bias(1);
  bias(0) = (1.0 - spec.r) * std::sqrt(spec.prior_var);
  const Real variance = spec.r * spec.r * spec.noise_var;
  return ModelSummary(std::move(bias), variance);
}

namespace {

void validate_subset(const OlsSpec& spec) {
  std::set<int> seen;
  for (int l : spec.subset) {
    if (l < 1 || l > spec.k) throw std::invalid_argument("ols_summary: covariate index out of range");
    if (!seen.insert(l).second) throw std::invalid_argument("ols_summary: duplicate covariate index");
  }
}

}  // namespace

ModelSummary ols_summary(const OlsSpec& spec) {
  if (spec.k < 1 || spec.n < 1) throw std::invalid_argument("ols_summary: k and n must be positive");
  if (!(spec.beta2 > 0.0)) throw std::invalid_argument("ols_summary: beta2 must be > 0");
  if (!(spec.sigma2 >= 0.0)) throw std::invalid_argument("ols_summary: sigma2 must be >= 0");
  validate_subset(spec);
  const int d = static_cast<int>(spec.subset.size());
  if (spec.n <= d + 1)
    throw std::invalid_argument("ols_summary: need n > |subset| + 1 for the variance moment");

  const Real excluded = static_cast<Real>(spec.k - d);
  const Real variance =
      (spec.beta2 * excluded + spec.sigma2) * static_cast<Real>(d) / static_cast<Real>(spec.n - d - 1);

  Vector bias = Vector::Constant(spec.k, std::sqrt(spec.beta2));
  for (int l : spec.subset) bias(l - 1) = 0.0;
  return ModelSummary(std::move(bias), variance);
}

Real ridge_bias_factor(const RidgeSpec& spec) {
  if (spec.singular_values.empty()) throw std::invalid_argument("ridge_bias_factor: empty spectrum");
  if (!(spec.lambda >= 0.0)) throw std::invalid_argument("ridge_bias_factor: lambda must be >= 0");
  Real mean = 0.0;
  for (Real s : spec.singular_values) {
    if (!(s >= 0.0)) throw std::invalid_argument("ridge_bias_factor: singular values must be >= 0");
    const Real s2 = s * s;
    mean += (spec.lambda == 0.0) ? 1.0 : s2 / (s2 + spec.lambda);
  }
  mean /= static_cast<Real>(spec.singular_values.size());
  return 1.0 - mean;
}

}  // namespace predmkt
