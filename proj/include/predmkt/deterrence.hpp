#pragma once

#include <optional>
#include <vector>

#include "predmkt/models.hpp"
#include "predmkt/types.hpp"

namespace predmkt::deterrence {

/// Model under a common bias direction: the conditional bias is
/// alpha * b0(f,x), so the squared bias is alpha^2 * B0.
struct CommonBiasModel {
  Real alpha = 0.0;
  Real variance = 0.0;
  Real cost = 1.0;  // model-dependent cost c_m
};

/// Sequential game: the incumbent commits to a model, the challenger
/// observes it and enters (paying c_f plus its model cost) or stays out,
/// then prices are set.
struct SeqGameSpec {
  std::vector<CommonBiasModel> incumbent_set;
  std::vector<CommonBiasModel> challenger_set;
  Real B0 = 1.0;
  Real sigma2 = 1.0;
  Real c_f = 0.0;
  Real outside_option = -5.0;
  /// Bias constant of the incumbent's MSE-minimizing model, the reference
  /// for the biased-deterrence flag. Callers with an analytic family
  /// should supply the exact minimizer; defaults to the grid minimizer.
  std::optional<Real> alpha_star;
};

ModelSummary to_summary(const CommonBiasModel& m, Real B0);

/// Challenger profit from answering m1 with m2: the duopoly price
/// max_w (1-w^2) S1 - (1-w)^2 S2 - 2w(1-w) a1 a2 B0  (S_i = a_i^2 B0 + V_i)
/// evaluated at the interior stationary weight clamped to [0,1] and at the
/// endpoints, minus the model cost and the fixed cost.
Real entrant_payoff(const CommonBiasModel& m1, const CommonBiasModel& m2,
                    const SeqGameSpec& spec);

/// Bias constant used as the biased-deterrence reference.
Real alpha_star(const SeqGameSpec& spec);

struct SeqFlags {
  bool biased_deterrence = false;
  bool overinvestment_deterrence = false;
  bool positive_price = true;  // firm 1's price > 0 in the reached subgame
  bool dmr = true;             // decreasing marginal returns in the reached duopoly
};

struct SeqOutcome {
  int incumbent_index = -1;
  CommonBiasModel incumbent;
  bool entered = false;
  std::optional<int> challenger_index;
  std::optional<CommonBiasModel> challenger;
  Real price1 = 0.0;
  Real price2 = 0.0;  // zero when no entry
  Real incumbent_profit = 0.0;
  Real c_f = 0.0;
  Real outside_option = 0.0;
  SeqFlags flags;
};

/// Backward induction over the discrete model sets. The challenger enters
/// when its best payoff is >= 0 (indifferent challengers enter) and breaks
/// model ties by list order; the incumbent breaks ties toward lower alpha,
/// then lower cost, then list order.
SeqOutcome solve_sequential(const SeqGameSpec& spec);

/// solve_sequential on every (c_f, outside option) cell, row-major with
/// c_f as the slow axis.
std::vector<SeqOutcome> scan_deterrence_region(const SeqGameSpec& base,
                                               const std::vector<Real>& cf_grid,
                                               const std::vector<Real>& u_grid);

/// Models undominated in the (alpha, variance) plane, sorted by alpha.
std::vector<CommonBiasModel> pareto_frontier(std::vector<CommonBiasModel> models);

/// Ridge-style grid: alpha in n_points steps over [0, alpha_max] with
/// variance 1/(1+alpha); every model costs c_m.
std::vector<CommonBiasModel> ridge_like_grid(int n_points, Real alpha_max, Real c_m);

/// Continuous MSE minimizer of the ridge-like family: the root of
/// 2 a B0 (1+a)^2 = 1.
Real ridge_like_alpha_star(Real B0);

/// Equal-bias grid with variance in n_points steps over [v_min, v_max]
/// and cost c0 - c1 * V (collecting more data costs more and lowers
/// variance).
std::vector<CommonBiasModel> data_moat_grid(int n_points, Real alpha, Real v_min, Real v_max,
                                            Real c0, Real c1);

}  // namespace predmkt::deterrence
