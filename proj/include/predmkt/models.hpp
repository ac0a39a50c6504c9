#pragma once

#include <string>
#include <vector>

#include "predmkt/types.hpp"

namespace predmkt {

/// Sufficient statistics of a trained model for market computations:
/// expected squared bias B = |bias_vec|^2, expected variance V, and the
/// bias vector itself so that cross-model bias inner products are exact.
struct ModelSummary {
  Vector bias_vec;
  Real variance = 0.0;
  Real cost = 1.0;
  std::string label;

  ModelSummary() = default;
  ModelSummary(Vector bias, Real var, Real model_cost = 1.0, std::string name = {});

  Real squared_bias() const { return bias_vec.squaredNorm(); }
};

/// E[b_i b_j]: inner product of the two bias vectors. Both summaries must
/// live in the same bias space (equal dimension).
Real bias_inner(const ModelSummary& a, const ModelSummary& b);

struct MarketConfig {
  Real sigma2 = 1.0;          // irreducible noise
  Real outside_option = -1.0; // consumer payoff from buying nothing, < 0
  int n_firms = 1;

  MarketConfig() = default;
  MarketConfig(Real sigma2_, Real outside_option_, int n_firms_);
};

/// Shrinkage estimator r*y for a Gaussian state theta ~ N(0, prior_var)
/// observed with noise of variance noise_var.
struct ForecastSpec {
  Real r = 1.0;
  Real prior_var = 1.0;
  Real noise_var = 1.0;
};

/// Least squares on a subset of covariates; excluded coefficients are
/// fixed to zero. Indices are 1-based in {1..k}.
struct OlsSpec {
  int k = 1;
  int n = 3;
  Real beta2 = 1.0;  // E[beta_l^2]
  Real sigma2 = 1.0;
  std::vector<int> subset;
};

struct RidgeSpec {
  Real lambda = 0.0;
  std::vector<Real> singular_values;
};

/// B = (1-r)^2 * prior_var, V = r^2 * noise_var. The bias vector is
/// one-dimensional, so every forecast model shares one bias direction.
ModelSummary forecast_summary(const ForecastSpec& spec);

/// With d included covariates: B = beta2*(k-d),
/// V = (beta2*(k-d) + sigma2) * d/(n-d-1). The bias vector has sqrt(beta2)
/// at each excluded index, so inner products count jointly excluded
/// covariates. Requires n > d+1.
ModelSummary ols_summary(const OlsSpec& spec);

/// 1 - mean_j s_j^2/(s_j^2 + lambda) over the supplied spectrum. Squared
/// bias conditional on (x, beta) scales as this factor squared.
Real ridge_bias_factor(const RidgeSpec& spec);

}  // namespace predmkt
