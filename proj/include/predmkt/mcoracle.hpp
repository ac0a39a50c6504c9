#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predmkt/models.hpp"
#include "predmkt/types.hpp"

namespace predmkt::mcoracle {

struct McConfig {
  long trials = 20000;
  std::uint64_t seed = 271828182ULL;
  Real tolerance = 0.02;  // relative
  int threads = 1;
};

struct Estimate {
  Real value = 0.0;
  Real stderr_ = 0.0;
};

struct OlsEstimates {
  Estimate bias_sq;  // product of two independent fits' errors at a fresh point
  Estimate variance; // half squared gap between the two fits
  Estimate mse;
  long regenerated = 0;  // singular-design redraws
};

/// Per trial: draw beta (iid normal with variance beta2), two independent
/// datasets, fit least squares on the subset with excluded coefficients
/// zero-filled, and score at a fresh test point. Two fits per trial give
/// simulation-only estimators of B and V with no closed form in the loop.
OlsEstimates simulate_ols(const OlsSpec& spec, const McConfig& mc);

/// Empirical mean squared error of the w-weighted combination of two
/// models fitted on independent datasets sharing (k, n, beta2, sigma2).
Estimate simulate_combined(const OlsSpec& a, const OlsSpec& b, Real w, const McConfig& mc);

struct ForecastEstimates {
  Estimate bias_sq;
  Estimate variance;
};

/// Decomposition of the shrinkage estimator r*y for a Gaussian state.
ForecastEstimates simulate_forecast(const ForecastSpec& spec, const McConfig& mc);

struct RidgeSimSpec {
  int k = 4;
  int n = 20;
  Real beta2 = 1.0;
  Real sigma2 = 1.0;
  Real lambda = 1.0;
};

struct RidgeEstimates {
  Estimate factor;            // 1 - estimated shrinkage of E[beta_hat] along beta
  Estimate empirical_factor;  // ridge_bias_factor of the sampled spectra
};

/// Estimates the shrinkage of the ridge estimator's conditional mean
/// toward zero and the bias factor implied by the sampled singular values.
RidgeEstimates simulate_ridge(const RidgeSimSpec& spec, const McConfig& mc);

struct CheckResult {
  std::string name;
  Real estimate = 0.0;
  Real target = 0.0;
  Real stderr_ = 0.0;
  bool pass = false;
};

/// The standard battery: forecast, OLS subset sizes, combined models, and
/// ridge shrinkage, each compared against the closed-form summaries. A
/// check passes when |estimate - target| <= max(tol * |target|, 3 se).
std::vector<CheckResult> verification_suite(const McConfig& mc);

}  // namespace predmkt::mcoracle
