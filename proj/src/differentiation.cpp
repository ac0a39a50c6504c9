#include "predmkt/differentiation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "predmkt/combiner.hpp"
#include "predmkt/pricing.hpp"

namespace predmkt::differentiation {

namespace {

constexpr Real kBisectTol = 1e-10;

void require_interior(const ParamFamily& fam, Real t0) {
  if (!(t0 > fam.t_min && t0 < fam.t_max))
    throw std::invalid_argument("differentiation: t0 must be interior to the family domain");
}

Real fd_step(const ParamFamily& fam, Real t0, Real scale) {
  Real h = std::max(scale, scale * std::abs(t0));
  const Real room = 0.5 * std::min(t0 - fam.t_min, fam.t_max - t0);
  return std::min(h, room);
}

Real bias_sq(const ParamFamily& fam, Real t) { return fam.summary_at(t).squared_bias(); }
Real variance(const ParamFamily& fam, Real t) { return fam.summary_at(t).variance; }

Real d_bias_sq(const ParamFamily& fam, Real t0) {
  if (fam.dB) return fam.dB(t0);
  const Real h = fd_step(fam, t0, 1e-5);
  return (bias_sq(fam, t0 + h) - bias_sq(fam, t0 - h)) / (2.0 * h);
}

Real d_variance(const ParamFamily& fam, Real t0) {
  if (fam.dV) return fam.dV(t0);
  const Real h = fd_step(fam, t0, 1e-5);
  return (variance(fam, t0 + h) - variance(fam, t0 - h)) / (2.0 * h);
}

Real d2_bias_sq(const ParamFamily& fam, Real t0) {
  if (fam.d2B) return fam.d2B(t0);
  const Real h = fd_step(fam, t0, 1e-4);
  return (bias_sq(fam, t0 + h) - 2.0 * bias_sq(fam, t0) + bias_sq(fam, t0 - h)) / (h * h);
}

Real d2_variance(const ParamFamily& fam, Real t0) {
  if (fam.d2V) return fam.d2V(t0);
  const Real h = fd_step(fam, t0, 1e-4);
  return (variance(fam, t0 + h) - 2.0 * variance(fam, t0) + variance(fam, t0 - h)) / (h * h);
}

Vector d_bias_vec(const ParamFamily& fam, Real t0) {
  if (fam.bias_derivative) return fam.bias_derivative(t0);
  const Real h = fd_step(fam, t0, 1e-5);
  const Vector hi = fam.summary_at(t0 + h).bias_vec;
  const Vector lo = fam.summary_at(t0 - h).bias_vec;
  if (hi.size() != lo.size())
    throw std::invalid_argument("differentiation: bias dimension changes with t");
  return (hi - lo) / (2.0 * h);
}

}  // namespace

Real foc_residual(const ParamFamily& fam, Real t0) {
  require_interior(fam, t0);
  return d_variance(fam, t0) + 2.0 * d_bias_sq(fam, t0);
}

SocTerms soc_terms(const ParamFamily& fam, Real t0) {
  require_interior(fam, t0);
  const Real b = bias_sq(fam, t0);
  const Real v = variance(fam, t0);
  if (!(b > 0.0) || !(v > 0.0))
    throw std::invalid_argument("soc_terms: needs B(t0) > 0 and V(t0) > 0");

  SocTerms terms;
  terms.curvature = -0.25 * d2_variance(fam, t0) - 0.5 * d2_bias_sq(fam, t0);
  const Real db = d_bias_sq(fam, t0);
  terms.split = db * db * (1.0 / (8.0 * b) + 1.0 / (4.0 * v));

  // theta'^2 as the squared rate of rotation of the bias direction:
  // project b'(t0) orthogonally to b(t0) and divide by B(t0).
  const Vector bias = fam.summary_at(t0).bias_vec;
  const Vector dbias = d_bias_vec(fam, t0);
  const Vector perp = dbias - (bias.dot(dbias) / b) * bias;
  terms.angle = 0.5 * b * (perp.squaredNorm() / b);
  return terms;
}

Real soc_lhs(const ParamFamily& fam, Real t0) { return soc_terms(fam, t0).lhs(); }

Real weight_derivative(const ParamFamily& fam, Real t0) {
  require_interior(fam, t0);
  const Real v = variance(fam, t0);
  if (!(v > 0.0)) throw std::invalid_argument("weight_derivative: needs V(t0) > 0");
  return -(d_variance(fam, t0) + d_bias_sq(fam, t0)) / (4.0 * v);
}

std::vector<SymmetricCandidate> symmetric_candidates(const ParamFamily& fam,
                                                     int grid_resolution) {
  if (grid_resolution < 2)
    throw std::invalid_argument("symmetric_candidates: grid resolution must be >= 2");
  const Real span = fam.t_max - fam.t_min;
  auto grid_point = [&](int i) {
    return fam.t_min + (static_cast<Real>(i) + 0.5) * span / grid_resolution;
  };

  std::vector<SymmetricCandidate> out;
  auto emit = [&](Real root) {
    SymmetricCandidate c;
    c.t0 = root;
    c.foc = foc_residual(fam, root);
    try {
      c.terms = soc_terms(fam, root);
      c.soc = c.terms.lhs();
      c.candidate = c.soc <= 0.0;
    } catch (const std::invalid_argument&) {
      c.soc_defined = false;
      c.soc = std::numeric_limits<Real>::quiet_NaN();
    }
    out.push_back(c);
  };

  Real prev_t = grid_point(0);
  Real prev_f = foc_residual(fam, prev_t);
  if (prev_f == 0.0) emit(prev_t);
  for (int i = 1; i < grid_resolution; ++i) {
    const Real t = grid_point(i);
    const Real f = foc_residual(fam, t);
    if (f == 0.0) {
      emit(t);
    } else if (prev_f != 0.0 && ((prev_f < 0.0) != (f < 0.0))) {
      Real lo = prev_t, hi = t, flo = prev_f;
      while (hi - lo > kBisectTol) {
        const Real mid = 0.5 * (lo + hi);
        const Real fm = foc_residual(fam, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      emit(0.5 * (lo + hi));
    }
    prev_t = t;
    prev_f = f;
  }
  return out;
}

namespace {

OlsSpec spec_for(const CovariateGame& game, const std::vector<int>& subset) {
  OlsSpec spec;
  spec.k = game.k;
  spec.n = game.n;
  spec.beta2 = game.beta2;
  spec.sigma2 = game.sigma2;
  spec.subset = subset;
  return spec;
}

std::vector<int> canonical_subset(const CovariateGame& game, const std::vector<int>& opponent,
                                  int size, int overlap) {
  std::vector<int> subset(opponent.begin(), opponent.begin() + overlap);
  std::vector<bool> taken(game.k + 1, false);
  for (int l : opponent) taken[l] = true;
  for (int l = 1; l <= game.k && static_cast<int>(subset.size()) < size; ++l)
    if (!taken[l]) subset.push_back(l);
  return subset;
}

/// Marginal price of firm 1 under consumer-optimal weights.
Real marginal_price_1(const CovariateGame& game, const std::vector<int>& m1,
                      const std::vector<int>& m2) {
  const ModelSummary s1 = ols_summary(spec_for(game, m1));
  const ModelSummary s2 = ols_summary(spec_for(game, m2));
  const MarketConfig cfg(game.sigma2, -1.0, 2);
  const combiner::Coalition both({1, 2}, {s1, s2});
  const combiner::Coalition alone({2}, {s2});
  return combiner::coalition_utility(both, cfg) - combiner::coalition_utility(alone, cfg);
}

}  // namespace

Real ols_duopoly_price(const CovariateGame& game, const std::vector<int>& m1,
                       const std::vector<int>& m2, Real w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("ols_duopoly_price: w must be in [0,1]");
  const ModelSummary s1 = ols_summary(spec_for(game, m1));
  const ModelSummary s2 = ols_summary(spec_for(game, m2));

  std::vector<bool> included(game.k + 1, false);
  for (int l : m1) included[l] = true;
  for (int l : m2) included[l] = true;
  int jointly_excluded = 0;
  for (int l = 1; l <= game.k; ++l)
    if (!included[l]) ++jointly_excluded;

  const Real b1 = s1.squared_bias(), v1 = s1.variance;
  const Real b2 = s2.squared_bias(), v2 = s2.variance;
  return (b2 + v2) - w * w * (b1 + v1) - (1.0 - w) * (1.0 - w) * (b2 + v2) -
         2.0 * w * (1.0 - w) * game.beta2 * static_cast<Real>(jointly_excluded);
}

BestResponse ols_best_response(const CovariateGame& game, const std::vector<int>& opponent) {
  if (!game.cost) throw std::invalid_argument("ols_best_response: cost schedule not set");
  const int d2 = static_cast<int>(opponent.size());
  const int d_max = std::min(game.k, game.n - 2);

  BestResponse best;
  bool first = true;
  for (int d = 0; d <= d_max; ++d) {
    const int o_min = std::max(0, d + d2 - game.k);
    const int o_max = std::min(d, d2);
    for (int o = o_min; o <= o_max; ++o) {
      const std::vector<int> subset = canonical_subset(game, opponent, d, o);
      const Real payoff = marginal_price_1(game, subset, opponent) - game.cost(d);
      if (first || payoff > best.payoff + 1e-12) {
        best = BestResponse{subset, d, o, payoff};
        first = false;
      }
    }
  }
  return best;
}

InteriorCondition interior_condition(const CovariateGame& game) {
  if (game.n < 2) throw std::invalid_argument("interior_condition: needs n >= 2");
  const Real k = static_cast<Real>(game.k);
  const Real n = static_cast<Real>(game.n);

  InteriorCondition cond;
  cond.u_prime_0 = -(game.beta2 * (k - 2.0 * n + 2.0) + game.sigma2) / (2.0 * n - 2.0);
  // U'(k) involves the full-model variance, defined only for n > k + 1.
  // The band itself stays reportable (it is empty whenever k >= 2(n-1)).
  cond.u_prime_k =
      game.n > game.k + 1
          ? (game.beta2 * (k * k - 3.0 * k * (n - 1.0) + 2.0 * (n - 1.0) * (n - 1.0)) -
             (n - 1.0) * game.sigma2) /
                (2.0 * (n - k - 1.0) * (n - k - 1.0))
          : std::numeric_limits<Real>::quiet_NaN();
  cond.band_lo = k * k / (n - 1.0) - 3.0 * k + 2.0 * n - 2.0;
  cond.band_hi = -k + 2.0 * n - 2.0;
  cond.band_empty = cond.band_lo >= cond.band_hi;
  cond.ratio = game.sigma2 / game.beta2;
  cond.inside = !cond.band_empty && cond.ratio > cond.band_lo && cond.ratio < cond.band_hi;
  return cond;
}

std::vector<EquilibriumProfile> ols_equilibria(const CovariateGame& game) {
  if (!game.cost) throw std::invalid_argument("ols_equilibria: cost schedule not set");
  const int d_max = std::min(game.k, game.n - 2);
  std::vector<EquilibriumProfile> found;

  for (int d2 = 0; d2 <= d_max; ++d2) {
    const std::vector<int> m2 = canonical_subset(game, {}, d2, 0);
    const BestResponse br_vs_m2 = ols_best_response(game, m2);
    for (int d1 = 0; d1 <= d2; ++d1) {
      const int o_min = std::max(0, d1 + d2 - game.k);
      for (int o = o_min; o <= d1; ++o) {
        const std::vector<int> m1 = canonical_subset(game, m2, d1, o);
        const Real payoff1 = marginal_price_1(game, m1, m2) - game.cost(d1);
        if (payoff1 < br_vs_m2.payoff - 1e-9) continue;
        const Real payoff2 = marginal_price_1(game, m2, m1) - game.cost(d2);
        if (payoff2 < ols_best_response(game, m1).payoff - 1e-9) continue;
        EquilibriumProfile eq;
        eq.d1 = d1;
        eq.d2 = d2;
        eq.overlap = o;
        eq.same_model = (d1 == d2 && o == d1);
        eq.payoff1 = payoff1;
        eq.payoff2 = payoff2;
        found.push_back(eq);
      }
    }
  }
  return found;
}

SurplusComparison diff_surplus_comparison(const ModelSummary& m1, const ModelSummary& m2,
                                          const MarketConfig& cfg) {
  auto consumer_surplus = [&](const ModelSummary& a, const ModelSummary& b) {
    const combiner::Coalition pair({1, 2}, {a, b});
    const pricing::PriceProfile prices = pricing::marginal_prices(pair, cfg);
    return pricing::surpluses(pair, prices, cfg).consumer;
  };

  const Real standalone1 = -(cfg.sigma2 + m1.squared_bias() + m1.variance) - m1.cost;
  const Real standalone2 = -(cfg.sigma2 + m2.squared_bias() + m2.variance) - m2.cost;

  SurplusComparison cmp;
  cmp.designated = standalone1 >= standalone2 ? 1 : 2;
  const ModelSummary& pick = cmp.designated == 1 ? m1 : m2;
  cmp.cs_differentiated = consumer_surplus(m1, m2);
  cmp.cs_same_model = consumer_surplus(pick, pick);
  cmp.holds = cmp.cs_differentiated <= cmp.cs_same_model + 1e-12;
  return cmp;
}

ParamFamily linear_tradeoff_family(Real v0, Real v1, Real t_min, Real t_max) {
  ParamFamily fam;
  fam.t_min = t_min;
  fam.t_max = t_max;
  fam.summary_at = [v0, v1](Real t) {
    Vector bias(1);
    bias(0) = t;
    return ModelSummary(std::move(bias), v0 - v1 * t);
  };
  fam.dB = [](Real t) { return 2.0 * t; };
  fam.d2B = [](Real) { return 2.0; };
  fam.dV = [v1](Real) { return -v1; };
  fam.d2V = [](Real) { return 0.0; };
  fam.bias_derivative = [](Real) { return Vector::Ones(1); };
  return fam;
}

ParamFamily rotating_bias_family(Real b0, Real variance, Real t_min, Real t_max) {
  const Real r = std::sqrt(b0);
  ParamFamily fam;
  fam.t_min = t_min;
  fam.t_max = t_max;
  fam.summary_at = [r, variance](Real t) {
    Vector bias(2);
    bias << r * std::cos(t), r * std::sin(t);
    return ModelSummary(std::move(bias), variance);
  };
  fam.dB = [](Real) { return 0.0; };
  fam.d2B = [](Real) { return 0.0; };
  fam.dV = [](Real) { return 0.0; };
  fam.d2V = [](Real) { return 0.0; };
  fam.bias_derivative = [r](Real t) {
    Vector d(2);
    d << -r * std::sin(t), r * std::cos(t);
    return d;
  };
  return fam;
}

}  // namespace predmkt::differentiation
