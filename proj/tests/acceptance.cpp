// Acceptance suite: one pass/fail line per criterion. Exits nonzero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "predmkt/combiner.hpp"
#include "predmkt/deterrence.hpp"
#include "predmkt/differentiation.hpp"
#include "predmkt/entry.hpp"
#include "predmkt/mcoracle.hpp"
#include "predmkt/pricing.hpp"

using namespace predmkt;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& msg) {
    if (!cond) {
      pass = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << msg;
    }
  }
};

// Exact rational arithmetic for the closed-form expectations.
struct Frac {
  long long num = 0;
  long long den = 1;

  Frac() = default;
  Frac(long long n, long long d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(std::abs(num), den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  Frac operator+(const Frac& o) const { return Frac(num * o.den + o.num * den, den * o.den); }
  Frac operator-(const Frac& o) const { return Frac(num * o.den - o.num * den, den * o.den); }
  Frac operator*(const Frac& o) const { return Frac(num * o.num, den * o.den); }
  Frac operator/(const Frac& o) const { return Frac(num * o.den, den * o.num); }
  bool operator>=(const Frac& o) const { return num * o.den >= o.num * den; }
  bool operator<=(const Frac& o) const { return num * o.den <= o.num * den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// ------------------------------------------------------------ criterion 1

Outcome criterion_figure1() {
  Outcome out;
  entry::SymmetricMarket base;
  base.B = 0.0;
  base.sigma2 = 1.0;
  base.cost = 0.25;
  base.outside_option = -5.0;
  base.n_firms = 10;

  std::vector<Real> grid;
  for (int k = 1; k <= 64; ++k) grid.push_back(k / 20.0);
  const auto rows = entry::sweep_variance(grid, base);

  const Frac cost(1, 4), sigma2(1), outside(-5);
  Real best_consumer = -1e18, best_v = 0.0, prev_total = 1e18;
  for (int k = 1; k <= 64; ++k) {
    const Frac v(k, 20);
    // Indifferent firms enter: largest j with V/(j(j-1)) >= c.
    int ne = 1;
    if (v >= Frac(1, 2)) {
      ne = 2;
      while (v / Frac((ne + 1) * ne) >= cost) ++ne;
    }
    Frac price, consumer, producer, total;
    if (ne == 1) {
      price = Frac(0) - v - sigma2 - outside;
      consumer = Frac(0);
      producer = price - cost;
      total = producer;
    } else {
      price = v / Frac(ne * (ne - 1));
      consumer = Frac(0) - Frac(2 * ne - 1, ne * (ne - 1)) * v - sigma2 - outside;
      producer = Frac(ne) * (price - cost);
      total = Frac(0) - v / Frac(ne) - sigma2 - Frac(ne) * cost - outside;
    }

    const auto& row = rows[k - 1];
    out.require(row.outcome.n_entrants == ne,
                "entrant count mismatch at V=" + std::to_string(v.value()));
    out.require(std::abs(row.outcome.price - price.value()) <= 1e-12, "price off at k=" + std::to_string(k));
    out.require(std::abs(row.outcome.consumer - consumer.value()) <= 1e-12,
                "consumer surplus off at k=" + std::to_string(k));
    out.require(std::abs(row.outcome.producer - producer.value()) <= 1e-12,
                "producer surplus off at k=" + std::to_string(k));
    out.require(std::abs(row.outcome.total - total.value()) <= 1e-12,
                "total surplus off at k=" + std::to_string(k));

    out.require(row.outcome.total <= prev_total + 1e-12, "total surplus not nonincreasing");
    prev_total = row.outcome.total;
    if (row.outcome.consumer > best_consumer) {
      best_consumer = row.outcome.consumer;
      best_v = row.V;
    }
  }

  // Steps at V = 0.25 j(j-1) and the consumer-surplus peak.
  out.require(rows[8].outcome.n_entrants == 1 && rows[9].outcome.n_entrants == 2,
              "step to two entrants not at V=0.5");
  out.require(rows[28].outcome.n_entrants == 2 && rows[29].outcome.n_entrants == 3,
              "step to three entrants not at V=1.5");
  out.require(rows[58].outcome.n_entrants == 3 && rows[59].outcome.n_entrants == 4,
              "step to four entrants not at V=3.0");
  out.require(std::abs(best_v - 0.5) <= 1e-12, "consumer surplus not maximized at V=2c");
  out.require(std::abs(best_consumer - 3.25) <= 1e-12, "peak consumer surplus is not 3.25");
  for (int k : {10, 30, 60})
    out.require(rows[k - 1].outcome.producer == 0.0,
                "producer surplus nonzero at threshold V=" + std::to_string(k / 20.0));
  return out;
}

// ------------------------------------------------------------ criterion 2

Outcome criterion_prices() {
  Outcome out;
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<Real> bias(-0.9, 0.9);
  std::uniform_real_distribution<Real> var(0.05, 2.5);
  std::uniform_real_distribution<Real> noise(0.0, 2.0);
  std::uniform_real_distribution<Real> low_u(-30.0, -10.0);

  int verified = 0;
  long attempts = 0;
  while (verified < 500 && attempts < 100000) {
    ++attempts;
    const int n = 1 + static_cast<int>(rng() % 5);
    const int dim = 1 + static_cast<int>(rng() % 3);
    std::vector<int> ids;
    std::vector<ModelSummary> models;
    for (int i = 0; i < n; ++i) {
      Vector b(dim);
      for (int j = 0; j < dim; ++j) b(j) = bias(rng);
      ids.push_back(i);
      models.emplace_back(std::move(b), var(rng));
    }
    const combiner::Coalition c(ids, models);
    const MarketConfig cfg(noise(rng), low_u(rng), n);
    if (!pricing::check_dmr(c, cfg).holds) continue;
    ++verified;

    const auto marginal = pricing::marginal_prices(c, cfg);
    const auto solved = pricing::solve_prices(c, cfg);
    out.require(solved.residual <= 1e-10, "fixed-point residual above 1e-10");
    for (const auto& [firm, p] : solved.prices.prices) {
      out.require(p >= -1e-12, "negative equilibrium price");
      out.require(std::abs(p - marginal.prices.at(firm)) <= 1e-8,
                  "fixed point differs from the marginal price");
    }
    if (!out.pass) break;
  }
  out.require(verified == 500, "could not assemble 500 DMR-verified instances");
  return out;
}

// ------------------------------------------------------------ criterion 3

Outcome criterion_dmr() {
  Outcome out;
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<Real> unif(0.0, 2.0);
  std::uniform_real_distribution<Real> margin(0.01, 3.0);

  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const Real b = unif(rng), v = unif(rng), s2 = unif(rng);
    const Real u = -b - 1.5 * v - s2 - margin(rng);
    Vector biasvec(1);
    biasvec(0) = std::sqrt(b);
    std::vector<int> ids;
    std::vector<ModelSummary> models;
    for (int i = 0; i < n; ++i) {
      ids.push_back(i);
      models.emplace_back(biasvec, v);
    }
    const combiner::Coalition c(ids, models);
    const MarketConfig cfg(s2, u, n);
    out.require(pricing::check_dmr(c, cfg).holds, "DMR failed under the sufficient bound");
    if (!out.pass) break;
  }

  // Constructed violation: outside option above the bound.
  std::vector<int> ids{0, 1, 2};
  std::vector<ModelSummary> models(3, ModelSummary(Vector::Zero(1), 1.0));
  const combiner::Coalition c(ids, models);
  const MarketConfig cfg(1.0, -1.2, 3);
  const auto res = pricing::check_dmr(c, cfg);
  out.require(!res.holds, "constructed violation not detected");
  if (res.witness) {
    const auto u = pricing::subset_utilities(c, cfg);
    const auto& w = *res.witness;
    const std::uint32_t bit = 1u << w.firm;
    const bool nested = (w.inner_mask & bit) != 0 && (w.outer_mask & w.inner_mask) == w.inner_mask;
    const Real inner = u[w.inner_mask] - u[w.inner_mask & ~bit];
    const Real outer = u[w.outer_mask] - u[w.outer_mask & ~bit];
    out.require(nested && inner < outer, "witness does not violate the inequality");
  } else {
    out.require(false, "missing witness");
  }
  return out;
}

// ------------------------------------------------------------ criterion 4

Outcome criterion_mc_ols() {
  Outcome out;
  mcoracle::McConfig mc;
  mc.trials = 200000;
  mc.seed = 90210;
  mc.threads = 4;

  for (int d = 0; d <= 4; ++d) {
    OlsSpec spec;
    spec.k = 4;
    spec.n = 20;
    spec.beta2 = 1.0;
    spec.sigma2 = 1.0;
    for (int l = 1; l <= d; ++l) spec.subset.push_back(l);
    const ModelSummary summary = ols_summary(spec);
    const auto est = mcoracle::simulate_ols(spec, mc);
    const std::string tag = " (d=" + std::to_string(d) + ")";

    if (summary.squared_bias() == 0.0) {
      out.require(std::abs(est.bias_sq.value) <= 3.0 * est.bias_sq.stderr_,
                  "bias estimate beyond 3 standard errors of zero" + tag);
    } else {
      out.require(std::abs(est.bias_sq.value - summary.squared_bias()) <=
                      0.02 * summary.squared_bias(),
                  "bias estimate off by more than 2%" + tag);
    }
    if (summary.variance == 0.0) {
      out.require(est.variance.value == 0.0, "null-model variance not exactly zero" + tag);
    } else {
      out.require(std::abs(est.variance.value - summary.variance) <= 0.02 * summary.variance,
                  "variance estimate off by more than 2%" + tag);
    }
    const Real mse = summary.squared_bias() + summary.variance + spec.sigma2;
    out.require(std::abs(est.mse.value - mse) <= 0.02 * mse, "MSE off by more than 2%" + tag);
  }

  // Combined-model checks against the quadratic form.
  auto spec_with = [](std::vector<int> subset) {
    OlsSpec s;
    s.k = 4;
    s.n = 20;
    s.beta2 = 1.0;
    s.sigma2 = 1.0;
    s.subset = std::move(subset);
    return s;
  };
  struct Case {
    std::vector<int> m1, m2;
    Real w;
  };
  for (const Case& cs : {Case{{1, 2}, {1, 3}, 0.5}, Case{{1, 2}, {1, 2}, 0.5},
                         Case{{1, 2}, {3, 4}, 0.4}}) {
    const OlsSpec a = spec_with(cs.m1), b = spec_with(cs.m2);
    const combiner::Coalition pair({1, 2}, {ols_summary(a), ols_summary(b)});
    Vector wv(2);
    wv << cs.w, 1.0 - cs.w;
    const Real target = combiner::loss_of_weights(pair, combiner::WeightVector(wv), 1.0);
    const auto est = mcoracle::simulate_combined(a, b, cs.w, mc);
    out.require(std::abs(est.value - target) <= 0.02 * target,
                "combined MSE off by more than 2%");
  }
  return out;
}

// ------------------------------------------------------------ criterion 5

Outcome criterion_differentiation() {
  Outcome out;
  namespace diff = predmkt::differentiation;

  const auto fam = diff::linear_tradeoff_family();
  const auto candidates = diff::symmetric_candidates(fam, 512);
  out.require(candidates.size() == 1, "expected exactly one first-order root");
  if (!candidates.empty()) {
    out.require(std::abs(candidates[0].t0 - 0.25) <= 1e-9, "root not at 0.25 within 1e-9");
    out.require(std::abs(candidates[0].soc + 5.0 / 12.0) <= 1e-6, "soc_lhs not -5/12 within 1e-6");
    out.require(candidates[0].candidate, "root not classified as a candidate");
  }

  // Finite-difference path agrees.
  diff::ParamFamily fd = fam;
  fd.dB = fd.d2B = fd.dV = fd.d2V = nullptr;
  fd.bias_derivative = nullptr;
  out.require(std::abs(diff::soc_lhs(fd, 0.25) + 5.0 / 12.0) <= 1e-6,
              "finite-difference soc_lhs not -5/12 within 1e-6");

  // Weight derivative against the numerical optimizer path.
  const Real t0 = 0.25, h = 1e-5;
  auto weight_on_first = [&](Real t) {
    const combiner::Coalition pair({0, 1}, {fam.summary_at(t), fam.summary_at(t0)});
    return combiner::optimal_weights(pair, 1.0).weights.weights(0);
  };
  const Real numeric = (weight_on_first(t0 + h) - weight_on_first(t0 - h)) / (2.0 * h);
  out.require(std::abs(diff::weight_derivative(fam, t0) - numeric) <= 1e-4,
              "weight derivative differs from the numerical path");
  out.require(std::abs(diff::weight_derivative(fam, t0) - 1.0 / 6.0) <= 1e-12,
              "weight derivative closed form is not 1/6");

  // Rotating-bias family: the angle term equals B0/2.
  diff::ParamFamily rot = diff::rotating_bias_family(1.0, 1.0);
  rot.bias_derivative = nullptr;  // exercise the finite-difference route
  out.require(std::abs(diff::soc_terms(rot, 1.2).angle - 0.5) <= 1e-6,
              "angle term is not B0/2 within 1e-6");
  return out;
}

// ------------------------------------------------------------ criterion 6

struct FoundEquilibria {
  std::vector<std::pair<ModelSummary, ModelSummary>> differentiated;
};

Outcome criterion_covariate_game(FoundEquilibria& found) {
  Outcome out;
  namespace diff = predmkt::differentiation;

  for (int k = 4; k <= 6; ++k) {
    diff::CovariateGame game;
    game.k = k;
    game.n = 20;
    game.beta2 = 1.0;
    game.sigma2 = 1.0;
    game.cost = [](int d) { return 0.01 + 0.02 * d + 0.01 * d * d; };  // strictly convex

    const auto equilibria = diff::ols_equilibria(game);
    bool any_diff = false;
    for (const auto& eq : equilibria) {
      if (eq.same_model) {
        out.require(eq.d1 == k, "same-model equilibrium excludes a covariate (k=" +
                                    std::to_string(k) + ")");
        continue;
      }
      any_diff = true;
      std::vector<int> m2;
      for (int l = 1; l <= eq.d2; ++l) m2.push_back(l);
      std::vector<int> m1(m2.begin(), m2.begin() + eq.overlap);
      for (int l = eq.d2 + 1; static_cast<int>(m1.size()) < eq.d1; ++l) m1.push_back(l);
      ModelSummary s1 = ols_summary(OlsSpec{k, 20, 1.0, 1.0, m1});
      ModelSummary s2 = ols_summary(OlsSpec{k, 20, 1.0, 1.0, m2});
      s1.cost = game.cost(eq.d1);
      s2.cost = game.cost(eq.d2);
      found.differentiated.emplace_back(std::move(s1), std::move(s2));
    }
    out.require(any_diff, "no differentiated equilibrium at k=" + std::to_string(k));
  }

  // Costless covariates with the noise-to-signal ratio inside the band.
  diff::CovariateGame flat;
  flat.k = 6;
  flat.n = 20;
  flat.beta2 = 1.0;
  flat.sigma2 = 24.0;
  flat.cost = [](int) { return 0.05; };
  const auto cond = diff::interior_condition(flat);
  out.require(cond.inside, "noise-to-signal ratio not inside the interior band");
  out.require(cond.u_prime_0 > 0.0 && cond.u_prime_k < 0.0, "endpoint derivative signs wrong");

  // Integer maximizer of the same-model utility is interior, and the
  // same-model profile there admits the covariate swap.
  int best_d = 0;
  Real best_u = -1e18;
  for (int d = 0; d <= flat.k; ++d) {
    std::vector<int> subset;
    for (int l = 1; l <= d; ++l) subset.push_back(l);
    const ModelSummary s = ols_summary(OlsSpec{flat.k, flat.n, flat.beta2, flat.sigma2, subset});
    const Real u = -flat.sigma2 - s.squared_bias() - 0.5 * s.variance;
    if (u > best_u) {
      best_u = u;
      best_d = d;
    }
  }
  out.require(best_d >= 1 && best_d < flat.k, "same-model optimum not interior");
  std::vector<int> shared;
  for (int l = 1; l <= best_d; ++l) shared.push_back(l);
  std::vector<int> swapped = shared;
  swapped.back() = best_d + 1;
  const Real gain = diff::ols_duopoly_price(flat, swapped, shared, 0.5) -
                    diff::ols_duopoly_price(flat, shared, shared, 0.5);
  out.require(gain > 0.0, "swap deviation not profitable at the interior optimum");
  out.require(std::abs(gain - 0.5 * flat.beta2) <= 1e-12, "swap gain is not beta2/2");
  return out;
}

// ------------------------------------------------------------ criterion 7

Outcome criterion_surplus_comparison(const FoundEquilibria& found) {
  Outcome out;
  out.require(!found.differentiated.empty(), "no differentiated equilibria to compare");
  const MarketConfig cfg(1.0, -50.0, 2);
  for (const auto& [m1, m2] : found.differentiated) {
    const auto cmp = differentiation::diff_surplus_comparison(m1, m2, cfg);
    out.require(cmp.holds, "differentiated consumer surplus above the same-model counterfactual");
  }
  return out;
}

// ------------------------------------------------------------ criterion 8

Outcome criterion_deterrence() {
  Outcome out;
  namespace det = predmkt::deterrence;

  auto grid_of = [](Real lo, Real hi, int cells) {
    std::vector<Real> g;
    for (int i = 0; i < cells; ++i)
      g.push_back(lo + (hi - lo) * static_cast<Real>(i) / static_cast<Real>(cells - 1));
    return g;
  };
  const auto cf_grid = grid_of(0.05, 0.65, 50);
  const auto u_grid = grid_of(-8.0, -1.5, 50);

  auto has_open_rectangle = [&](const std::vector<det::SeqOutcome>& cells,
                                auto&& flag) {
    for (int i = 0; i + 1 < 50; ++i)
      for (int j = 0; j + 1 < 50; ++j) {
        const bool block = flag(cells[i * 50 + j]) && flag(cells[i * 50 + j + 1]) &&
                           flag(cells[(i + 1) * 50 + j]) && flag(cells[(i + 1) * 50 + j + 1]);
        if (block) return true;
      }
    return false;
  };

  auto staircase_ok = [&](const std::vector<det::SeqOutcome>& cells) {
    for (int j = 0; j < 50; ++j) {
      bool deterred = false;
      for (int i = 0; i < 50; ++i) {
        const bool no_entry = !cells[i * 50 + j].entered;
        if (deterred && !no_entry) return false;
        deterred = deterred || no_entry;
      }
    }
    return true;
  };

  // Biased deterrence on the ridge-like grid.
  det::SeqGameSpec ridge;
  ridge.incumbent_set = det::ridge_like_grid(21, 2.0, 0.05);
  ridge.challenger_set = ridge.incumbent_set;
  ridge.B0 = 1.0;
  ridge.sigma2 = 1.0;
  ridge.alpha_star = det::ridge_like_alpha_star(1.0);
  const auto ridge_cells = det::scan_deterrence_region(ridge, cf_grid, u_grid);
  out.require(has_open_rectangle(ridge_cells,
                                 [](const det::SeqOutcome& c) {
                                   return c.flags.biased_deterrence;
                                 }),
              "no open rectangle of biased-deterrence cells");
  out.require(staircase_ok(ridge_cells), "deterrence staircase broken on the ridge grid");

  // Overinvestment on the equal-bias, cost-decreasing-in-variance grid.
  det::SeqGameSpec moat;
  moat.incumbent_set = det::data_moat_grid(21, 0.2, 0.2, 1.0, 1.3, 1.2);
  moat.challenger_set = moat.incumbent_set;
  moat.B0 = 1.0;
  moat.sigma2 = 1.0;
  const auto moat_cells = det::scan_deterrence_region(moat, cf_grid, u_grid);
  out.require(has_open_rectangle(moat_cells,
                                 [](const det::SeqOutcome& c) {
                                   return c.flags.overinvestment_deterrence;
                                 }),
              "no open rectangle of overinvestment cells");
  out.require(staircase_ok(moat_cells), "deterrence staircase broken on the data-moat grid");
  return out;
}

// ------------------------------------------------------------ criterion 9

#ifndef PREDMKT_CLI_PATH
#define PREDMKT_CLI_PATH "predmkt"
#endif

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion_determinism() {
  Outcome out;
  const std::string cli = PREDMKT_CLI_PATH;
  const std::string dir = "acceptance_tmp";
  std::system(("mkdir -p " + dir).c_str());

  auto run_verify = [&](const std::string& file, int threads) {
    const std::string cmd = cli + " --seed 777 --threads " + std::to_string(threads) +
                            " --out " + dir + "/" + file + " verify --trials 20000" +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };

  out.require(run_verify("a.json", 1) == 0, "verify run 1 failed");
  out.require(run_verify("b.json", 1) == 0, "verify run 2 failed");
  out.require(run_verify("c.json", 8) == 0, "verify run with 8 threads failed");

  const std::string a = slurp(dir + "/a.json");
  const std::string b = slurp(dir + "/b.json");
  const std::string c = slurp(dir + "/c.json");
  out.require(!a.empty(), "verify produced no output");
  out.require(a == b, "same-seed reruns differ");
  out.require(a == c, "thread counts change the report bytes");
  return out;
}

}  // namespace

int main() {
  FoundEquilibria found;
  int failures = 0;

  auto report = [&](int id, const std::string& name, Outcome out, double seconds) {
    std::printf("%s  criterion %d: %s (%.2fs)%s%s\n", out.pass ? "PASS" : "FAIL", id,
                name.c_str(), seconds, out.pass ? "" : " -- ",
                out.pass ? "" : out.detail.str().c_str());
    if (!out.pass) ++failures;
  };

  auto timed = [&](int id, const std::string& name, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out = fn();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(id, name, std::move(out), secs);
    return secs;
  };

  const double t1 = timed(1, "Figure 1 reproduction (closed form, exact)", criterion_figure1);
  const double t2 = timed(2, "fixed-point prices equal marginal prices under DMR",
                          criterion_prices);
  const double t3 = timed(3, "DMR theorem check", criterion_dmr);
  const double t4 = timed(4, "Monte Carlo OLS decomposition", criterion_mc_ols);
  timed(5, "differentiation conditions", criterion_differentiation);
  timed(6, "OLS covariate game", [&] { return criterion_covariate_game(found); });
  timed(7, "differentiation lowers consumer surplus",
        [&] { return criterion_surplus_comparison(found); });
  const double t8 = timed(8, "deterrence regions", criterion_deterrence);
  timed(9, "verify determinism across runs and thread counts", criterion_determinism);

  // Stated runtime budgets.
  struct Budget {
    int id;
    double seconds, limit;
  };
  for (const Budget& b : {Budget{1, t1, 1.0}, Budget{2, t2, 30.0}, Budget{3, t3, 10.0},
                          Budget{4, t4, 60.0}, Budget{8, t8, 60.0}}) {
    if (b.seconds >= b.limit) {
      std::printf("FAIL  criterion %d runtime: %.2fs exceeds %.0fs budget\n", b.id, b.seconds,
                  b.limit);
      ++failures;
    }
  }

  if (failures == 0) std::printf("All acceptance criteria passed.\n");
  return failures == 0 ? 0 : 1;
}
