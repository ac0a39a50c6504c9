#include "predmkt/mcoracle.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "predmkt/combiner.hpp"

namespace predmkt::mcoracle {

namespace {

constexpr long kChunk = 1024;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, long trial) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(trial) + 1)));
}

template <int N>
struct ChunkSums {
  std::array<Real, N> sum{};
  std::array<Real, N> sumsq{};
  long extra = 0;  // regeneration counter
};

/// Runs `trials` independent trials, each on its own substream, and
/// reduces per-chunk partial sums in chunk order. Chunk boundaries are
/// fixed, so results are bit-identical for any thread count.
template <int N, class PerTrial>
std::pair<std::array<Estimate, N>, long> run_trials(long trials, const McConfig& mc,
                                                    PerTrial&& per_trial) {
  if (trials < 1) throw std::invalid_argument("mcoracle: trials must be positive");
  const long n_chunks = (trials + kChunk - 1) / kChunk;
  std::vector<ChunkSums<N>> chunks(n_chunks);

  auto work_chunk = [&](long c) {
    ChunkSums<N>& acc = chunks[c];
    const long lo = c * kChunk;
    const long hi = std::min(trials, lo + kChunk);
    std::array<Real, N> sample{};
    for (long t = lo; t < hi; ++t) {
      std::mt19937_64 rng = substream(mc.seed, t);
      acc.extra += per_trial(rng, sample);
      for (int i = 0; i < N; ++i) {
        acc.sum[i] += sample[i];
        acc.sumsq[i] += sample[i] * sample[i];
      }
    }
  };

  const int threads = std::max(1, mc.threads);
  if (threads == 1) {
    for (long c = 0; c < n_chunks; ++c) work_chunk(c);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (long c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) work_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  std::array<Real, N> sum{}, sumsq{};
  long extra = 0;
  for (const ChunkSums<N>& c : chunks) {
    for (int i = 0; i < N; ++i) {
      sum[i] += c.sum[i];
      sumsq[i] += c.sumsq[i];
    }
    extra += c.extra;
  }

  std::array<Estimate, N> est;
  const Real n = static_cast<Real>(trials);
  for (int i = 0; i < N; ++i) {
    est[i].value = sum[i] / n;
    const Real var = trials > 1
                         ? std::max<Real>(0.0, (sumsq[i] - n * est[i].value * est[i].value) /
                                                   (n - 1.0))
                         : 0.0;
    est[i].stderr_ = std::sqrt(var / n);
  }
  return {est, extra};
}

Matrix draw_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<Real> gauss(0.0, 1.0);
  Matrix x(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = gauss(rng);
  return x;
}

Vector draw_vector(std::mt19937_64& rng, int size, Real stddev) {
  std::normal_distribution<Real> gauss(0.0, stddev);
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = gauss(rng);
  return v;
}

struct SubsetFit {
  std::vector<int> cols;  // zero-based included columns
  int k = 0;

  explicit SubsetFit(const OlsSpec& spec) : k(spec.k) {
    for (int l : spec.subset) cols.push_back(l - 1);
    std::sort(cols.begin(), cols.end());
  }

  /// Least squares on the included columns; regenerates the dataset while
  /// the normal matrix is singular. Returns the full-length coefficient
  /// vector with excluded entries zero.
  Vector fit(std::mt19937_64& rng, const Vector& beta, int n, Real sigma, long& regen) const {
    Vector coef = Vector::Zero(k);
    if (cols.empty()) {
      // The null model still consumes its dataset draw so that estimators
      // with different subsets stay on the same stream layout.
      draw_matrix(rng, n, k);
      draw_vector(rng, n, 1.0);
      return coef;
    }
    const int d = static_cast<int>(cols.size());
    while (true) {
      const Matrix x = draw_matrix(rng, n, k);
      const Vector eps = draw_vector(rng, n, 1.0);
      Matrix xs(n, d);
      for (int j = 0; j < d; ++j) xs.col(j) = x.col(cols[j]);
      const Vector y = x * beta + sigma * eps;
      const Matrix normal = xs.transpose() * xs;
      Eigen::FullPivLU<Matrix> lu(normal);
      if (!lu.isInvertible()) {
        ++regen;
        continue;
      }
      const Vector sub = lu.solve(xs.transpose() * y);
      for (int j = 0; j < d; ++j) coef(cols[j]) = sub(j);
      return coef;
    }
  }
};

void check_spec(const OlsSpec& spec) {
  if (spec.n <= static_cast<int>(spec.subset.size()) + 1)
    throw std::invalid_argument("mcoracle: need n > |subset| + 1");
}

}  // namespace

OlsEstimates simulate_ols(const OlsSpec& spec, const McConfig& mc) {
  check_spec(spec);
  const SubsetFit fitter(spec);
  const Real beta_sd = std::sqrt(spec.beta2);
  const Real sigma = std::sqrt(spec.sigma2);

  auto per_trial = [&](std::mt19937_64& rng, std::array<Real, 3>& out) -> long {
    long regen = 0;
    const Vector beta = draw_vector(rng, spec.k, beta_sd);
    const Vector coef1 = fitter.fit(rng, beta, spec.n, sigma, regen);
    const Vector coef2 = fitter.fit(rng, beta, spec.n, sigma, regen);
    std::normal_distribution<Real> gauss(0.0, 1.0);
    const Vector x = draw_vector(rng, spec.k, 1.0);
    const Real f = x.dot(beta);
    const Real y = f + sigma * gauss(rng);
    const Real pred1 = x.dot(coef1);
    const Real pred2 = x.dot(coef2);
    out[0] = (pred1 - f) * (pred2 - f);        // E = squared bias
    out[1] = 0.5 * (pred1 - pred2) * (pred1 - pred2);  // E = variance
    out[2] = (pred1 - y) * (pred1 - y);        // E = full MSE
    return regen;
  };

  auto [est, regen] = run_trials<3>(mc.trials, mc, per_trial);
  return OlsEstimates{est[0], est[1], est[2], regen};
}

Estimate simulate_combined(const OlsSpec& a, const OlsSpec& b, Real w, const McConfig& mc) {
  if (a.k != b.k || a.n != b.n || a.beta2 != b.beta2 || a.sigma2 != b.sigma2)
    throw std::invalid_argument("simulate_combined: specs must share (k, n, beta2, sigma2)");
  if (!(w >= 0.0 && w <= 1.0))
    throw std::invalid_argument("simulate_combined: w must be in [0,1]");
  check_spec(a);
  check_spec(b);

  const SubsetFit fit_a(a), fit_b(b);
  const Real beta_sd = std::sqrt(a.beta2);
  const Real sigma = std::sqrt(a.sigma2);

  auto per_trial = [&](std::mt19937_64& rng, std::array<Real, 1>& out) -> long {
    long regen = 0;
    const Vector beta = draw_vector(rng, a.k, beta_sd);
    const Vector coef1 = fit_a.fit(rng, beta, a.n, sigma, regen);
    const Vector coef2 = fit_b.fit(rng, beta, a.n, sigma, regen);
    std::normal_distribution<Real> gauss(0.0, 1.0);
    const Vector x = draw_vector(rng, a.k, 1.0);
    const Real y = x.dot(beta) + sigma * gauss(rng);
    const Real pred = w * x.dot(coef1) + (1.0 - w) * x.dot(coef2);
    out[0] = (pred - y) * (pred - y);
    return regen;
  };

  auto [est, regen] = run_trials<1>(mc.trials, mc, per_trial);
  (void)regen;
  return est[0];
}

ForecastEstimates simulate_forecast(const ForecastSpec& spec, const McConfig& mc) {
  if (!(spec.r >= 0.0 && spec.r <= 1.0))
    throw std::invalid_argument("simulate_forecast: r must lie in [0,1]");
  const Real prior_sd = std::sqrt(spec.prior_var);
  const Real noise_sd = std::sqrt(spec.noise_var);

  auto per_trial = [&](std::mt19937_64& rng, std::array<Real, 2>& out) -> long {
    std::normal_distribution<Real> gauss(0.0, 1.0);
    const Real theta = prior_sd * gauss(rng);
    const Real est1 = spec.r * (theta + noise_sd * gauss(rng));
    const Real est2 = spec.r * (theta + noise_sd * gauss(rng));
    out[0] = (est1 - theta) * (est2 - theta);
    out[1] = 0.5 * (est1 - est2) * (est1 - est2);
    return 0;
  };

  auto [est, regen] = run_trials<2>(mc.trials, mc, per_trial);
  (void)regen;
  return ForecastEstimates{est[0], est[1]};
}

RidgeEstimates simulate_ridge(const RidgeSimSpec& spec, const McConfig& mc) {
  if (spec.n <= spec.k + 1) throw std::invalid_argument("simulate_ridge: need n > k + 1");
  if (!(spec.lambda >= 0.0)) throw std::invalid_argument("simulate_ridge: lambda must be >= 0");
  const Real beta_sd = std::sqrt(spec.beta2);
  const Real sigma = std::sqrt(spec.sigma2);

  auto per_trial = [&](std::mt19937_64& rng, std::array<Real, 2>& out) -> long {
    long regen = 0;
    while (true) {
      const Vector beta = draw_vector(rng, spec.k, beta_sd);
      if (beta.squaredNorm() < 1e-12) {
        ++regen;
        continue;
      }
      const Matrix x = draw_matrix(rng, spec.n, spec.k);
      const Vector eps = draw_vector(rng, spec.n, 1.0);
      const Vector y = x * beta + sigma * eps;
      Matrix normal = x.transpose() * x;
      for (int j = 0; j < spec.k; ++j) normal(j, j) += spec.lambda;
      Eigen::FullPivLU<Matrix> lu(normal);
      if (!lu.isInvertible()) {
        ++regen;
        continue;
      }
      const Vector coef = lu.solve(x.transpose() * y);
      out[0] = 1.0 - beta.dot(coef) / beta.squaredNorm();

      Eigen::JacobiSVD<Matrix> svd(x);
      Real shrink = 0.0;
      for (int j = 0; j < spec.k; ++j) {
        const Real s2 = svd.singularValues()(j) * svd.singularValues()(j);
        shrink += (spec.lambda == 0.0) ? 1.0 : s2 / (s2 + spec.lambda);
      }
      out[1] = 1.0 - shrink / static_cast<Real>(spec.k);
      return regen;
    }
  };

  auto [est, regen] = run_trials<2>(mc.trials, mc, per_trial);
  (void)regen;
  return RidgeEstimates{est[0], est[1]};
}

namespace {

CheckResult make_check(std::string name, const Estimate& est, Real target, Real tol) {
  CheckResult c;
  c.name = std::move(name);
  c.estimate = est.value;
  c.target = target;
  c.stderr_ = est.stderr_;
  c.pass = std::abs(est.value - target) <=
           std::max(tol * std::abs(target), 3.0 * est.stderr_);
  return c;
}

}  // namespace

std::vector<CheckResult> verification_suite(const McConfig& mc) {
  if (mc.trials < 1000)
    throw std::invalid_argument("verification_suite: need at least 1000 trials");
  std::vector<CheckResult> checks;

  // Forecasting decomposition at the three reference shrinkage levels.
  for (Real r : {0.0, 0.5, 1.0}) {
    ForecastSpec spec{r, 4.0, 1.0};
    const ModelSummary summary = forecast_summary(spec);
    const ForecastEstimates est = simulate_forecast(spec, mc);
    const std::string tag = "forecast_r" + std::to_string(r).substr(0, 3);
    checks.push_back(make_check(tag + "_bias_sq", est.bias_sq, summary.squared_bias(), mc.tolerance));
    checks.push_back(make_check(tag + "_variance", est.variance, summary.variance, mc.tolerance));
  }

  // OLS subset sizes 0..k on the reference design.
  for (int d = 0; d <= 4; ++d) {
    OlsSpec spec;
    spec.k = 4;
    spec.n = 20;
    spec.beta2 = 1.0;
    spec.sigma2 = 1.0;
    for (int l = 1; l <= d; ++l) spec.subset.push_back(l);
    const ModelSummary summary = ols_summary(spec);
    const OlsEstimates est = simulate_ols(spec, mc);
    const std::string tag = "ols_d" + std::to_string(d);
    checks.push_back(make_check(tag + "_bias_sq", est.bias_sq, summary.squared_bias(), mc.tolerance));
    checks.push_back(make_check(tag + "_variance", est.variance, summary.variance, mc.tolerance));
    checks.push_back(make_check(tag + "_mse",
                                est.mse,
                                summary.squared_bias() + summary.variance + spec.sigma2,
                                mc.tolerance));
  }

  // Combined models against the quadratic-form loss.
  {
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
      const char* name;
      std::vector<int> m1, m2;
      Real w;
    };
    const Case cases[] = {
        {"combined_same_half", {1, 2}, {1, 2}, 0.5},
        {"combined_disjoint_cover", {1, 2}, {3, 4}, 0.5},
        {"combined_overlap", {1, 2}, {1, 3}, 0.5},
    };
    for (const Case& cs : cases) {
      const OlsSpec a = spec_with(cs.m1), b = spec_with(cs.m2);
      const combiner::Coalition pair({1, 2}, {ols_summary(a), ols_summary(b)});
      Vector w(2);
      w << cs.w, 1.0 - cs.w;
      const Real target = combiner::loss_of_weights(pair, combiner::WeightVector(w), a.sigma2);
      checks.push_back(make_check(cs.name, simulate_combined(a, b, cs.w, mc), target, mc.tolerance));
    }
  }

  // Ridge shrinkage: factor against the sampled spectra, and monotone
  // squared bias across a lambda grid.
  {
    const Real lambdas[] = {0.0, 1.0, 10.0};
    std::vector<RidgeEstimates> est;
    for (Real lam : lambdas)
      est.push_back(simulate_ridge(RidgeSimSpec{4, 20, 1.0, 1.0, lam}, mc));

    checks.push_back(make_check("ridge_lambda0_factor", est[0].factor, 0.0, mc.tolerance));
    checks.push_back(
        make_check("ridge_lambda1_factor", est[1].factor, est[1].empirical_factor.value,
                   std::max(mc.tolerance, 0.05)));

    Real min_step = std::numeric_limits<Real>::infinity();
    Real step_se = 0.0;
    for (std::size_t i = 1; i < est.size(); ++i) {
      const Real f_lo = est[i - 1].factor.value, f_hi = est[i].factor.value;
      const Real step = f_hi * f_hi - f_lo * f_lo;
      if (step < min_step) {
        min_step = step;
        step_se = 3.0 * std::hypot(est[i - 1].factor.stderr_, est[i].factor.stderr_);
      }
    }
    CheckResult mono;
    mono.name = "ridge_bias_sq_monotone";
    mono.estimate = min_step;
    mono.target = 0.0;
    mono.stderr_ = step_se;
    mono.pass = min_step >= -step_se;
    checks.push_back(mono);
  }

  return checks;
}

}  // namespace predmkt::mcoracle
