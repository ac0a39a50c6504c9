#include "predmkt/deterrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "predmkt/combiner.hpp"
#include "predmkt/pricing.hpp"

namespace predmkt::deterrence {

ModelSummary to_summary(const CommonBiasModel& m, Real B0) {
  if (!(m.alpha >= 0.0)) throw std::invalid_argument("CommonBiasModel: alpha must be >= 0");
  Vector bias(1);
  bias(0) = m.alpha * std::sqrt(B0);
  return ModelSummary(std::move(bias), m.variance, m.cost);
}

namespace {

Real gross_duopoly_value(const CommonBiasModel& m1, const CommonBiasModel& m2, Real B0) {
  const Real s1 = m1.alpha * m1.alpha * B0 + m1.variance;
  const Real s2 = m2.alpha * m2.alpha * B0 + m2.variance;
  const Real c = m1.alpha * m2.alpha * B0;

  auto value = [&](Real w) {
    return (1.0 - w * w) * s1 - (1.0 - w) * (1.0 - w) * s2 - 2.0 * w * (1.0 - w) * c;
  };

  Real best = std::max(value(0.0), value(1.0));
  const Real denom = s1 + s2 - 2.0 * c;  // (a1 - a2)^2 B0 + V1 + V2
  if (denom > 0.0) {
    const Real w_star = std::clamp((s2 - c) / denom, 0.0, 1.0);
    best = std::max(best, value(w_star));
  }
  return best;
}

}  // namespace

Real entrant_payoff(const CommonBiasModel& m1, const CommonBiasModel& m2,
                    const SeqGameSpec& spec) {
  return gross_duopoly_value(m1, m2, spec.B0) - m2.cost - spec.c_f;
}

Real alpha_star(const SeqGameSpec& spec) {
  if (spec.alpha_star) return *spec.alpha_star;
  if (spec.incumbent_set.empty())
    throw std::invalid_argument("alpha_star: empty incumbent set");
  const CommonBiasModel* best = &spec.incumbent_set.front();
  auto mse = [&](const CommonBiasModel& m) { return m.alpha * m.alpha * spec.B0 + m.variance; };
  for (const CommonBiasModel& m : spec.incumbent_set)
    if (mse(m) < mse(*best)) best = &m;
  return best->alpha;
}

SeqOutcome solve_sequential(const SeqGameSpec& spec) {
  if (spec.incumbent_set.empty() || spec.challenger_set.empty())
    throw std::invalid_argument("solve_sequential: model sets must be nonempty");
  if (!(spec.outside_option < 0.0))
    throw std::invalid_argument("solve_sequential: outside option must be < 0");

  const MarketConfig cfg(spec.sigma2, spec.outside_option, 2);
  const Real a_star = alpha_star(spec);

  // Monopoly benchmark: the model the incumbent would pick with no threat.
  auto monopoly_profit = [&](const CommonBiasModel& m) {
    const Real s = m.alpha * m.alpha * spec.B0 + m.variance;
    return -s - spec.sigma2 - spec.outside_option - m.cost - spec.c_f;
  };
  int star_index = 0;
  for (int i = 1; i < static_cast<int>(spec.incumbent_set.size()); ++i)
    if (monopoly_profit(spec.incumbent_set[i]) > monopoly_profit(spec.incumbent_set[star_index]))
      star_index = i;
  const Real star_cost = spec.incumbent_set[star_index].cost;

  SeqOutcome best_outcome;
  bool have_best = false;
  auto prefer = [&](const SeqOutcome& a, const SeqOutcome& b) {
    // Higher profit; ties toward lower alpha, then lower cost, then order.
    if (a.incumbent_profit != b.incumbent_profit)
      return a.incumbent_profit > b.incumbent_profit;
    if (a.incumbent.alpha != b.incumbent.alpha) return a.incumbent.alpha < b.incumbent.alpha;
    if (a.incumbent.cost != b.incumbent.cost) return a.incumbent.cost < b.incumbent.cost;
    return a.incumbent_index < b.incumbent_index;
  };

  for (int i = 0; i < static_cast<int>(spec.incumbent_set.size()); ++i) {
    const CommonBiasModel& m1 = spec.incumbent_set[i];
    SeqOutcome out;
    out.incumbent_index = i;
    out.incumbent = m1;
    out.c_f = spec.c_f;
    out.outside_option = spec.outside_option;

    // Challenger: best payoff across its set; indifferent challengers enter.
    int best_j = -1;
    Real best_payoff = -std::numeric_limits<Real>::infinity();
    for (int j = 0; j < static_cast<int>(spec.challenger_set.size()); ++j) {
      const Real payoff = entrant_payoff(m1, spec.challenger_set[j], spec);
      if (payoff > best_payoff + 1e-15) {
        best_payoff = payoff;
        best_j = j;
      }
    }
    out.entered = best_payoff >= 0.0;

    if (out.entered) {
      const CommonBiasModel& m2 = spec.challenger_set[best_j];
      out.challenger_index = best_j;
      out.challenger = m2;
      const combiner::Coalition pair({1, 2},
                                     {to_summary(m1, spec.B0), to_summary(m2, spec.B0)});
      const pricing::PriceProfile prices = pricing::marginal_prices(pair, cfg);
      out.price1 = prices.at(1);
      out.price2 = prices.at(2);
      out.incumbent_profit = out.price1 - m1.cost - spec.c_f;
      out.flags.positive_price = out.price1 > 0.0;
      out.flags.dmr = pricing::check_dmr(pair, cfg).holds;
    } else {
      out.price1 = -(m1.alpha * m1.alpha * spec.B0 + m1.variance) - spec.sigma2 -
                   spec.outside_option;
      out.incumbent_profit = out.price1 - m1.cost - spec.c_f;
      out.flags.positive_price = out.price1 > 0.0;
    }

    if (!have_best || prefer(out, best_outcome)) {
      best_outcome = out;
      have_best = true;
    }
  }

  if (!best_outcome.entered) {
    best_outcome.flags.biased_deterrence = best_outcome.incumbent.alpha > a_star;
    best_outcome.flags.overinvestment_deterrence = best_outcome.incumbent.cost > star_cost;
  }
  return best_outcome;
}

std::vector<SeqOutcome> scan_deterrence_region(const SeqGameSpec& base,
                                               const std::vector<Real>& cf_grid,
                                               const std::vector<Real>& u_grid) {
  std::vector<SeqOutcome> cells;
  cells.reserve(cf_grid.size() * u_grid.size());
  for (Real cf : cf_grid) {
    for (Real u : u_grid) {
      SeqGameSpec spec = base;
      spec.c_f = cf;
      spec.outside_option = u;
      cells.push_back(solve_sequential(spec));
    }
  }
  return cells;
}

std::vector<CommonBiasModel> pareto_frontier(std::vector<CommonBiasModel> models) {
  std::vector<CommonBiasModel> frontier;
  for (std::size_t i = 0; i < models.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < models.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool weakly = models[j].alpha <= models[i].alpha &&
                          models[j].variance <= models[i].variance;
      const bool strictly = models[j].alpha < models[i].alpha ||
                            models[j].variance < models[i].variance;
      dominated = weakly && strictly;
    }
    if (!dominated) frontier.push_back(models[i]);
  }
  std::stable_sort(frontier.begin(), frontier.end(),
                   [](const CommonBiasModel& a, const CommonBiasModel& b) {
                     return a.alpha < b.alpha;
                   });
  return frontier;
}

std::vector<CommonBiasModel> ridge_like_grid(int n_points, Real alpha_max, Real c_m) {
  if (n_points < 2) throw std::invalid_argument("ridge_like_grid: need at least two points");
  std::vector<CommonBiasModel> grid;
  grid.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    const Real alpha = alpha_max * static_cast<Real>(i) / static_cast<Real>(n_points - 1);
    grid.push_back(CommonBiasModel{alpha, 1.0 / (1.0 + alpha), c_m});
  }
  return grid;
}

Real ridge_like_alpha_star(Real B0) {
  // Root of 2 a B0 (1+a)^2 = 1 by bisection; the objective a^2 B0 + 1/(1+a)
  // is strictly convex toward the root from both sides.
  Real lo = 0.0, hi = 1.0;
  auto g = [B0](Real a) { return 2.0 * a * B0 * (1.0 + a) * (1.0 + a) - 1.0; };
  while (g(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const Real mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<CommonBiasModel> data_moat_grid(int n_points, Real alpha, Real v_min, Real v_max,
                                            Real c0, Real c1) {
  if (n_points < 2) throw std::invalid_argument("data_moat_grid: need at least two points");
  std::vector<CommonBiasModel> grid;
  grid.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    const Real v = v_min + (v_max - v_min) * static_cast<Real>(i) / static_cast<Real>(n_points - 1);
    const Real cost = c0 - c1 * v;
    if (!(cost > 0.0)) throw std::invalid_argument("data_moat_grid: cost must stay positive");
    grid.push_back(CommonBiasModel{alpha, v, cost});
  }
  return grid;
}

}  // namespace predmkt::deterrence
