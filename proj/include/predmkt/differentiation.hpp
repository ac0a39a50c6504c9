#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "predmkt/models.hpp"
#include "predmkt/types.hpp"

namespace predmkt::differentiation {

/// One-parameter model family t -> summary on an open interval. Analytic
/// derivatives are optional; central differences are used when absent
/// (step max(1e-5, 1e-5|t|), second derivatives at the 1e-4 scale).
struct ParamFamily {
  Real t_min = 0.0;
  Real t_max = 1.0;
  std::function<ModelSummary(Real)> summary_at;

  std::function<Real(Real)> dB, d2B;           // derivatives of squared bias
  std::function<Real(Real)> dV, d2V;           // derivatives of variance
  std::function<Vector(Real)> bias_derivative; // derivative of the bias vector
};

/// V'(t0) + 2 B'(t0): stationarity of a firm's payoff when both firms sit
/// at M(t0). Bias gets double weight because same-model biases are shared
/// while variances average.
Real foc_residual(const ParamFamily& fam, Real t0);

struct SocTerms {
  Real curvature = 0.0;  // -V''/4 - B''/2
  Real split = 0.0;      // B'^2 (1/(8B) + 1/(4V))
  Real angle = 0.0;      // (B/2) theta'^2
  Real lhs() const { return curvature + split + angle; }
};

/// The three second-order terms at t0. theta'(t0)^2 is computed as
/// |P_perp b'(t0)|^2 / B(t0), the exact limit of the squared angle
/// derivative at theta = 0 (arccos differentiation is singular there).
SocTerms soc_terms(const ParamFamily& fam, Real t0);

/// Sum of the three terms; a same-model equilibrium at t0 requires <= 0.
Real soc_lhs(const ParamFamily& fam, Real t0);

/// d/dt of the consumer's weight on the deviating firm, at the symmetric
/// point: w'(t0) = -(V'(t0) + B'(t0)) / (4 V(t0)).
Real weight_derivative(const ParamFamily& fam, Real t0);

struct SymmetricCandidate {
  Real t0 = 0.0;
  Real foc = 0.0;
  SocTerms terms;
  Real soc = 0.0;
  bool soc_defined = true;  // false when B(t0) = 0 or V(t0) = 0
  bool candidate = false;   // false: ruled out, differentiation must occur
  std::string classification() const {
    if (!soc_defined) return "soc_undefined";
    return candidate ? "candidate" : "ruled_out";
  }
};

/// Roots of the first-order condition located by sign change on a uniform
/// grid and refined by bisection to 1e-10, classified by the sign of the
/// second-order expression.
std::vector<SymmetricCandidate> symmetric_candidates(const ParamFamily& fam, int grid_resolution);

/// Two-firm covariate-selection game: least squares on chosen subsets of
/// {1..k}, entry cost a function of subset size.
struct CovariateGame {
  int k = 4;
  int n = 20;
  Real beta2 = 1.0;
  Real sigma2 = 1.0;
  std::function<Real(int)> cost;  // cost of a model with d covariates
};

/// Firm 1's price when firms hold subsets M1, M2 and the consumer uses
/// weight w on firm 1: the standalone loss of M2 minus the combined loss,
/// with the cross term counting jointly excluded covariates.
Real ols_duopoly_price(const CovariateGame& game, const std::vector<int>& m1,
                       const std::vector<int>& m2, Real w);

struct BestResponse {
  std::vector<int> subset;
  int size = 0;
  int overlap = 0;
  Real payoff = 0.0;  // price at the optimal weight, net of cost
};

/// Exact best response by enumerating (own size, overlap with opponent);
/// covariate exchangeability makes this reduction lossless. Ties resolve
/// to the lexicographically smallest (size, overlap).
BestResponse ols_best_response(const CovariateGame& game, const std::vector<int>& opponent);

struct InteriorCondition {
  Real u_prime_0 = 0.0;
  Real u_prime_k = 0.0;
  Real band_lo = 0.0;    // lower bound on sigma2/beta2
  Real band_hi = 0.0;    // upper bound on sigma2/beta2
  bool band_empty = false;
  Real ratio = 0.0;      // the game's sigma2/beta2
  bool inside = false;
};

/// Endpoint derivatives of the same-model utility U(d) treated as a
/// function of a continuous model size, and the signal-to-noise band on
/// which U has an interior maximum.
InteriorCondition interior_condition(const CovariateGame& game);

struct EquilibriumProfile {
  int d1 = 0;
  int d2 = 0;
  int overlap = 0;
  bool same_model = false;
  Real payoff1 = 0.0;
  Real payoff2 = 0.0;
};

/// All pure equilibria of the covariate game up to exchangeability,
/// enumerated over reduced states (d1, d2, overlap) with d1 <= d2.
std::vector<EquilibriumProfile> ols_equilibria(const CovariateGame& game);

struct SurplusComparison {
  int designated = 0;     // firm with the larger standalone net utility
  Real cs_differentiated = 0.0;
  Real cs_same_model = 0.0;
  bool holds = false;     // cs_differentiated <= cs_same_model
};

/// Consumer surplus at a differentiated duopoly versus the same-model
/// counterfactual in which both firms sell the designated firm's model.
SurplusComparison diff_surplus_comparison(const ModelSummary& m1, const ModelSummary& m2,
                                          const MarketConfig& cfg);

// Named families used by the CLI and tests.

/// Linear bias-variance tradeoff: V(t) = v0 - v1 t, squared bias t^2,
/// one-dimensional bias vector t (common bias direction).
ParamFamily linear_tradeoff_family(Real v0 = 1.0, Real v1 = 1.0, Real t_min = 0.0,
                                   Real t_max = 1.0);

/// Constant-magnitude bias rotating at unit rate in the plane:
/// b(t) = sqrt(B0) (cos t, sin t), constant variance.
ParamFamily rotating_bias_family(Real b0 = 1.0, Real variance = 1.0, Real t_min = 0.0,
                                 Real t_max = 3.0);

}  // namespace predmkt::differentiation
