// Command-line front end: every subcommand resolves its configuration
// (defaults < config file < explicit flags), echoes it into the output
// header, and writes CSV for sweeps/scans or JSON for structured results.
// Exit codes: 0 success, 1 check or runtime failure, 2 usage.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "predmkt/deterrence.hpp"
#include "predmkt/differentiation.hpp"
#include "predmkt/entry.hpp"
#include "predmkt/mcoracle.hpp"
#include "predmkt/pricing.hpp"
#include "predmkt/version.hpp"

using json = nlohmann::ordered_json;
using namespace predmkt;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

/// One declared parameter: bound simultaneously to a CLI option and a
/// config-file key, echoed into output headers after resolution.
struct ParamTable {
  struct Entry {
    std::function<void(const json&)> from_json;
    std::function<json()> to_json;
    CLI::Option* option = nullptr;
  };
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;

  template <class T>
  void add(CLI::App* cmd, const std::string& name, T& target, const std::string& help) {
    Entry e;
    e.from_json = [&target](const json& v) { target = v.get<T>(); };
    e.to_json = [&target]() { return json(target); };
    e.option = cmd->add_option("--" + name, target, help)->capture_default_str();
    entries[name] = std::move(e);
    order.push_back(name);
  }

  /// Config-file values apply only where the command line stayed silent.
  void apply_config(const json& cfg) {
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      auto found = entries.find(it.key());
      if (found == entries.end())
        throw UsageError("unknown config key: " + it.key());
      if (found->second.option->count() == 0) {
        try {
          found->second.from_json(it.value());
        } catch (const json::exception& e) {
          throw UsageError("bad config value for " + it.key() + ": " + e.what());
        }
      }
    }
  }

  json resolved() const {
    json out;
    for (const std::string& name : order) out[name] = entries.at(name).to_json();
    return out;
  }
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  return cfg;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string csv_header(const std::string& command, const json& config) {
  std::ostringstream os;
  os << "# predmkt " << kVersion << "\n";
  os << "# command: " << command << "\n";
  os << "# config: " << config.dump() << "\n";
  return os.str();
}

json json_root(const std::string& command, const json& config) {
  json root;
  root["version"] = kVersion;
  root["command"] = command;
  root["config"] = config;
  return root;
}

std::vector<Real> linear_grid(Real lo, Real hi, Real step) {
  const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<Real> grid;
  grid.reserve(count);
  for (long i = 0; i < count; ++i) grid.push_back(lo + static_cast<Real>(i) * step);
  return grid;
}

std::vector<Real> spaced_grid(Real lo, Real hi, int cells) {
  std::vector<Real> grid;
  grid.reserve(cells);
  for (int i = 0; i < cells; ++i)
    grid.push_back(lo + (hi - lo) * static_cast<Real>(i) / static_cast<Real>(cells - 1));
  return grid;
}

struct GlobalOpts {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = mcoracle::McConfig{}.seed;
  int threads = 1;
};

// ---------------------------------------------------------------- sweep --

void run_sweep(const ParamTable& params, const GlobalOpts& global, Real b, Real sigma2,
               Real cost, Real outside, int n_firms, Real v_min, Real v_max, Real v_step) {
  if (!(v_step > 0.0) || !(v_min > 0.0) || v_max < v_min)
    throw UsageError("malformed V grid: need 0 < v_min <= v_max and v_step > 0");
  entry::SymmetricMarket base;
  base.B = b;
  base.sigma2 = sigma2;
  base.cost = cost;
  base.outside_option = outside;
  base.n_firms = n_firms;
  base.V = v_min;
  entry::assumption_failures(base);  // validates the static fields

  const auto rows = entry::sweep_variance(linear_grid(v_min, v_max, v_step), base);

  std::ostringstream os;
  os << csv_header("sweep", params.resolved());
  os << "V,n_entrants,price,consumer_surplus,producer_surplus,total_surplus,"
        "assumption_violations\n";
  for (const auto& row : rows) {
    std::string notes;
    for (std::size_t i = 0; i < row.violations.size(); ++i) {
      if (i) notes += "; ";
      notes += row.violations[i];
    }
    os << fmt(row.V) << ',' << row.outcome.n_entrants << ',' << fmt(row.outcome.price) << ','
       << fmt(row.outcome.consumer) << ',' << fmt(row.outcome.producer) << ','
       << fmt(row.outcome.total) << ',' << (notes.empty() ? "" : "\"" + notes + "\"") << "\n";
  }
  write_output(global.out_path, os.str());
}

// --------------------------------------------------------------- prices --

void run_prices(const ParamTable& params, const GlobalOpts& global, Real sigma2, Real outside,
                const std::vector<Real>& variances, std::vector<Real> biases,
                std::vector<Real> costs) {
  const std::size_t n = variances.size();
  if (n == 0) throw UsageError("prices: need at least one model variance");
  if (biases.empty()) biases.assign(n, 0.0);
  if (costs.empty()) costs.assign(n, 0.25);
  if (biases.size() != n || costs.size() != n)
    throw UsageError("prices: variances, biases, and costs must have equal lengths");

  std::vector<int> ids;
  std::vector<ModelSummary> models;
  for (std::size_t i = 0; i < n; ++i) {
    Vector bias(1);
    bias(0) = biases[i];
    ids.push_back(static_cast<int>(i) + 1);
    models.emplace_back(std::move(bias), variances[i], costs[i]);
  }
  const combiner::Coalition entrants(std::move(ids), std::move(models));
  const MarketConfig cfg(sigma2, outside, static_cast<int>(n));

  const auto solution = pricing::solve_prices(entrants, cfg);
  const auto marginal = pricing::marginal_prices(entrants, cfg);
  const auto dmr = pricing::check_dmr(entrants, cfg);
  const auto report = pricing::surpluses(entrants, solution.prices, cfg);

  json root = json_root("prices", params.resolved());
  json prices, marg, profits;
  for (const auto& [firm, p] : solution.prices.prices) prices[std::to_string(firm)] = p;
  for (const auto& [firm, p] : marginal.prices) marg[std::to_string(firm)] = p;
  for (const auto& [firm, pi] : report.per_firm_profit) profits[std::to_string(firm)] = pi;
  root["prices"] = prices;
  root["marginal_prices"] = marg;
  root["residual"] = solution.residual;
  root["iterations"] = solution.iterations;
  root["dmr_holds"] = dmr.holds;
  root["surpluses"] = {{"consumer", report.consumer},
                       {"producer", report.producer},
                       {"total", report.total},
                       {"per_firm_profit", profits}};
  write_output(global.out_path, root.dump(2) + "\n");
}

// ----------------------------------------------------------------- diff --

void run_diff(const ParamTable& params, const GlobalOpts& global, const std::string& family,
              Real v0, Real v1, Real b0, Real variance, Real t_min, Real t_max, int grid) {
  differentiation::ParamFamily fam;
  if (family == "linear") {
    fam = differentiation::linear_tradeoff_family(v0, v1, t_min, t_max);
  } else if (family == "rotating") {
    fam = differentiation::rotating_bias_family(b0, variance, t_min, t_max);
  } else {
    throw UsageError("diff: unknown family '" + family + "' (linear|rotating)");
  }
  if (grid < 2) throw UsageError("diff: grid must be at least 2");

  const auto candidates = differentiation::symmetric_candidates(fam, grid);
  std::ostringstream os;
  os << csv_header("diff", params.resolved());
  os << "t0,foc_residual,soc_term_curvature,soc_term_split,soc_term_angle,soc_lhs,"
        "classification\n";
  for (const auto& c : candidates) {
    os << fmt(c.t0) << ',' << fmt(c.foc) << ',' << fmt(c.terms.curvature) << ','
       << fmt(c.terms.split) << ',' << fmt(c.terms.angle) << ',' << fmt(c.soc) << ','
       << c.classification() << "\n";
  }
  write_output(global.out_path, os.str());
}

// -------------------------------------------------------------- olsgame --

void run_olsgame(const ParamTable& params, const GlobalOpts& global, int k, int n, Real beta2,
                 Real sigma2, Real c0, Real c1, Real c2) {
  if (k < 1 || k > 8) throw UsageError("olsgame: k must lie in 1..8 (exhaustive search)");
  differentiation::CovariateGame game;
  game.k = k;
  game.n = n;
  game.beta2 = beta2;
  game.sigma2 = sigma2;
  game.cost = [c0, c1, c2](int d) { return c0 + c1 * d + c2 * d * d; };

  const auto cond = differentiation::interior_condition(game);
  const auto equilibria = differentiation::ols_equilibria(game);
  const auto br_null = differentiation::ols_best_response(game, {});

  json root = json_root("olsgame", params.resolved());
  root["interior_condition"] = {{"u_prime_0", cond.u_prime_0},
                                {"u_prime_k", cond.u_prime_k},
                                {"band_lo", cond.band_lo},
                                {"band_hi", cond.band_hi},
                                {"band_empty", cond.band_empty},
                                {"noise_to_signal", cond.ratio},
                                {"inside_band", cond.inside}};
  json eqs = json::array();
  for (const auto& eq : equilibria) {
    eqs.push_back({{"d1", eq.d1},
                   {"d2", eq.d2},
                   {"overlap", eq.overlap},
                   {"same_model", eq.same_model},
                   {"payoff1", eq.payoff1},
                   {"payoff2", eq.payoff2}});
  }
  root["equilibria"] = eqs;
  root["best_response_to_null"] = {
      {"size", br_null.size}, {"overlap", br_null.overlap}, {"payoff", br_null.payoff}};
  write_output(global.out_path, root.dump(2) + "\n");
}

// ---------------------------------------------------------------- deter --

void run_deter(const ParamTable& params, const GlobalOpts& global, const std::string& family,
               int points, Real alpha_max, Real model_cost, Real alpha, Real v_min, Real v_max,
               Real cost_c0, Real cost_c1, Real b0, Real sigma2, Real cf_min, Real cf_max,
               Real u_min, Real u_max, int cells) {
  if (cells < 2) throw UsageError("deter: cells must be at least 2");
  if (!(u_max < 0.0)) throw UsageError("deter: outside-option grid must stay negative");

  deterrence::SeqGameSpec base;
  base.B0 = b0;
  base.sigma2 = sigma2;
  if (family == "ridge") {
    base.incumbent_set = deterrence::ridge_like_grid(points, alpha_max, model_cost);
    base.alpha_star = deterrence::ridge_like_alpha_star(b0);
  } else if (family == "datamoat") {
    base.incumbent_set = deterrence::data_moat_grid(points, alpha, v_min, v_max, cost_c0, cost_c1);
  } else {
    throw UsageError("deter: unknown family '" + family + "' (ridge|datamoat)");
  }
  base.challenger_set = base.incumbent_set;

  const auto cf_grid = spaced_grid(cf_min, cf_max, cells);
  const auto u_grid = spaced_grid(u_min, u_max, cells);
  const auto outcomes = deterrence::scan_deterrence_region(base, cf_grid, u_grid);

  std::ostringstream os;
  os << csv_header("deter", params.resolved());
  os << "c_f,outside_option,incumbent_alpha,incumbent_cost,entered,biased_deterrence,"
        "overinvestment_deterrence\n";
  for (const auto& cell : outcomes) {
    os << fmt(cell.c_f) << ',' << fmt(cell.outside_option) << ',' << fmt(cell.incumbent.alpha)
       << ',' << fmt(cell.incumbent.cost) << ',' << (cell.entered ? 1 : 0) << ','
       << (cell.flags.biased_deterrence ? 1 : 0) << ','
       << (cell.flags.overinvestment_deterrence ? 1 : 0) << "\n";
  }
  write_output(global.out_path, os.str());
}

// --------------------------------------------------------------- verify --

void run_verify(const ParamTable& params, const GlobalOpts& global, long trials, Real tolerance) {
  mcoracle::McConfig mc;
  mc.trials = trials;
  mc.tolerance = tolerance;
  mc.seed = global.seed;
  mc.threads = global.threads;

  const auto checks = mcoracle::verification_suite(mc);
  bool all_pass = true;
  json list = json::array();
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    list.push_back({{"name", c.name},
                    {"estimate", c.estimate},
                    {"target", c.target},
                    {"stderr", c.stderr_},
                    {"pass", c.pass}});
  }
  // The thread count never appears in the output: identical seeds must
  // produce byte-identical reports at any parallelism.
  json root = json_root("verify", params.resolved());
  root["seed"] = global.seed;
  root["checks"] = list;
  root["all_pass"] = all_pass;
  write_output(global.out_path, root.dump(2) + "\n");
  if (!all_pass) throw CheckFailure("verification checks failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Market equilibria for statistical prediction models"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--config", global.config_path, "JSON config file for the subcommand");
  app.add_option("--out", global.out_path, "Output path (default: stdout)");
  app.add_option("--seed", global.seed, "Monte Carlo seed")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads for Monte Carlo runs")
      ->envname("PREDMKT_THREADS")
      ->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Symmetric-entry variance sweep (CSV)");
  sweep->fallthrough();
  ParamTable sweep_params;
  Real sw_b = 0.0, sw_sigma2 = 1.0, sw_cost = 0.25, sw_outside = -5.0;
  int sw_firms = 10;
  Real sw_vmin = 0.05, sw_vmax = 3.2, sw_vstep = 0.05;
  sweep_params.add(sweep, "B", sw_b, "Expected squared bias of the common model");
  sweep_params.add(sweep, "sigma2", sw_sigma2, "Irreducible noise variance");
  sweep_params.add(sweep, "cost", sw_cost, "Entry cost per firm");
  sweep_params.add(sweep, "outside", sw_outside, "Consumer outside option (< 0)");
  sweep_params.add(sweep, "n_firms", sw_firms, "Number of potential entrants");
  sweep_params.add(sweep, "v_min", sw_vmin, "Smallest model variance");
  sweep_params.add(sweep, "v_max", sw_vmax, "Largest model variance");
  sweep_params.add(sweep, "v_step", sw_vstep, "Variance grid step");

  // prices
  auto* prices = app.add_subcommand("prices", "Equilibrium prices for explicit models (JSON)");
  prices->fallthrough();
  ParamTable prices_params;
  Real pr_sigma2 = 1.0, pr_outside = -5.0;
  std::vector<Real> pr_variances{1.0, 3.0}, pr_biases, pr_costs;
  prices_params.add(prices, "sigma2", pr_sigma2, "Irreducible noise variance");
  prices_params.add(prices, "outside", pr_outside, "Consumer outside option (< 0)");
  prices_params.add(prices, "variances", pr_variances, "Model variances");
  prices_params.add(prices, "biases", pr_biases,
                    "Common-direction bias constants (default: all zero)");
  prices_params.add(prices, "costs", pr_costs, "Model costs (default: 0.25 each)");

  // diff
  auto* diffc = app.add_subcommand("diff", "Symmetric-equilibrium candidate scan (CSV)");
  diffc->fallthrough();
  ParamTable diff_params;
  std::string df_family = "linear";
  Real df_v0 = 1.0, df_v1 = 1.0, df_b0 = 1.0, df_variance = 1.0, df_tmin = 0.0, df_tmax = 1.0;
  int df_grid = 256;
  diff_params.add(diffc, "family", df_family, "Model family: linear | rotating");
  diff_params.add(diffc, "v0", df_v0, "linear family: variance intercept");
  diff_params.add(diffc, "v1", df_v1, "linear family: variance slope");
  diff_params.add(diffc, "b0", df_b0, "rotating family: squared bias magnitude");
  diff_params.add(diffc, "variance", df_variance, "rotating family: constant variance");
  diff_params.add(diffc, "t_min", df_tmin, "Domain lower endpoint");
  diff_params.add(diffc, "t_max", df_tmax, "Domain upper endpoint");
  diff_params.add(diffc, "grid", df_grid, "Scan resolution");

  // olsgame
  auto* olsgame = app.add_subcommand("olsgame", "Covariate-choice duopoly analysis (JSON)");
  olsgame->fallthrough();
  ParamTable ols_params;
  int og_k = 4, og_n = 20;
  Real og_beta2 = 1.0, og_sigma2 = 1.0, og_c0 = 0.01, og_c1 = 0.02, og_c2 = 0.01;
  ols_params.add(olsgame, "k", og_k, "Total covariates");
  ols_params.add(olsgame, "n", og_n, "Data points per firm");
  ols_params.add(olsgame, "beta2", og_beta2, "Second moment of the coefficients");
  ols_params.add(olsgame, "sigma2", og_sigma2, "Irreducible noise variance");
  ols_params.add(olsgame, "cost_c0", og_c0, "Cost schedule constant term");
  ols_params.add(olsgame, "cost_c1", og_c1, "Cost schedule linear term");
  ols_params.add(olsgame, "cost_c2", og_c2, "Cost schedule quadratic term");

  // deter
  auto* deter = app.add_subcommand("deter", "Entry-deterrence region scan (CSV)");
  deter->fallthrough();
  ParamTable deter_params;
  std::string dt_family = "ridge";
  int dt_points = 21, dt_cells = 50;
  Real dt_alpha_max = 2.0, dt_model_cost = 0.05, dt_alpha = 0.2, dt_vmin = 0.2, dt_vmax = 1.0;
  Real dt_c0 = 1.3, dt_c1 = 1.2, dt_b0 = 1.0, dt_sigma2 = 1.0;
  Real dt_cfmin = 0.05, dt_cfmax = 0.65, dt_umin = -8.0, dt_umax = -1.5;
  deter_params.add(deter, "family", dt_family, "Model family: ridge | datamoat");
  deter_params.add(deter, "points", dt_points, "Model grid size");
  deter_params.add(deter, "alpha_max", dt_alpha_max, "ridge family: largest bias constant");
  deter_params.add(deter, "model_cost", dt_model_cost, "ridge family: per-model cost");
  deter_params.add(deter, "alpha", dt_alpha, "datamoat family: common bias constant");
  deter_params.add(deter, "v_min", dt_vmin, "datamoat family: smallest variance");
  deter_params.add(deter, "v_max", dt_vmax, "datamoat family: largest variance");
  deter_params.add(deter, "cost_c0", dt_c0, "datamoat family: cost intercept");
  deter_params.add(deter, "cost_c1", dt_c1, "datamoat family: cost slope in variance");
  deter_params.add(deter, "B0", dt_b0, "Squared norm of the common bias direction");
  deter_params.add(deter, "sigma2", dt_sigma2, "Irreducible noise variance");
  deter_params.add(deter, "cf_min", dt_cfmin, "Fixed-cost grid start");
  deter_params.add(deter, "cf_max", dt_cfmax, "Fixed-cost grid end");
  deter_params.add(deter, "u_min", dt_umin, "Outside-option grid start");
  deter_params.add(deter, "u_max", dt_umax, "Outside-option grid end");
  deter_params.add(deter, "cells", dt_cells, "Grid cells per axis");

  // verify
  auto* verify = app.add_subcommand("verify", "Monte Carlo verification report (JSON)");
  verify->fallthrough();
  ParamTable verify_params;
  long vf_trials = 50000;
  Real vf_tolerance = 0.02;
  verify_params.add(verify, "trials", vf_trials, "Trials per check (>= 1000)");
  verify_params.add(verify, "tolerance", vf_tolerance, "Relative tolerance per check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const json cfg = load_config(global.config_path);
    if (sweep->parsed()) {
      sweep_params.apply_config(cfg);
      run_sweep(sweep_params, global, sw_b, sw_sigma2, sw_cost, sw_outside, sw_firms, sw_vmin,
                sw_vmax, sw_vstep);
    } else if (prices->parsed()) {
      prices_params.apply_config(cfg);
      run_prices(prices_params, global, pr_sigma2, pr_outside, pr_variances, pr_biases, pr_costs);
    } else if (diffc->parsed()) {
      diff_params.apply_config(cfg);
      if (diffc->count("--t_max") == 0 && !cfg.contains("t_max") && df_family == "rotating")
        df_tmax = 3.0;
      run_diff(diff_params, global, df_family, df_v0, df_v1, df_b0, df_variance, df_tmin,
               df_tmax, df_grid);
    } else if (olsgame->parsed()) {
      ols_params.apply_config(cfg);
      run_olsgame(ols_params, global, og_k, og_n, og_beta2, og_sigma2, og_c0, og_c1, og_c2);
    } else if (deter->parsed()) {
      deter_params.apply_config(cfg);
      run_deter(deter_params, global, dt_family, dt_points, dt_alpha_max, dt_model_cost,
                dt_alpha, dt_vmin, dt_vmax, dt_c0, dt_c1, dt_b0, dt_sigma2, dt_cfmin, dt_cfmax,
                dt_umin, dt_umax, dt_cells);
    } else if (verify->parsed()) {
      verify_params.apply_config(cfg);
      run_verify(verify_params, global, vf_trials, vf_tolerance);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CheckFailure& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
