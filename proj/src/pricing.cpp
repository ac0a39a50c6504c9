#include "predmkt/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace predmkt::pricing {

namespace {

constexpr Real kFixedPointTol = 1e-10;
constexpr Real kDamping = 0.5;
constexpr long kMaxIterations = 100000;

combiner::Coalition sub_coalition(const Coalition& entrants, std::uint32_t mask) {
  std::vector<int> ids;
  std::vector<ModelSummary> models;
  for (int i = 0; i < entrants.size(); ++i) {
    if (mask & (1u << i)) {
      ids.push_back(entrants.members[i]);
      models.push_back(entrants.summaries[i]);
    }
  }
  return combiner::Coalition(std::move(ids), std::move(models));
}

void require_capped(const Coalition& entrants) {
  if (entrants.size() > kCoalitionCap)
    throw std::invalid_argument("pricing: coalition exceeds enumeration cap");
}

}  // namespace

Real PriceProfile::total() const {
  Real sum = 0.0;
  for (const auto& [firm, p] : prices) sum += p;
  return sum;
}

std::vector<Real> subset_utilities(const Coalition& entrants, const MarketConfig& cfg) {
  require_capped(entrants);
  const int n = entrants.size();
  std::vector<Real> u(std::size_t(1) << n);
  u[0] = cfg.outside_option;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask)
    u[mask] = combiner::coalition_utility(sub_coalition(entrants, mask), cfg);
  return u;
}

namespace {

PriceProfile psi_from_table(const PriceProfile& p, const Coalition& entrants,
                            const std::vector<Real>& u) {
  const int n = entrants.size();
  const std::uint32_t full = (1u << n) - 1;
  PriceProfile out;
  for (int i = 0; i < n; ++i) {
    const std::uint32_t others = full & ~(1u << i);
    Real best = std::numeric_limits<Real>::infinity();
    // E' runs over all subsets of E \ {i}, including the empty set.
    std::uint32_t sub = others;
    while (true) {
      Real value = u[full] - u[sub];
      std::uint32_t dropped = others & ~sub;
      for (int j = 0; j < n; ++j)
        if (dropped & (1u << j)) value -= p.at(entrants.members[j]);
      best = std::min(best, value);
      if (sub == 0) break;
      sub = (sub - 1) & others;
    }
    out.prices[entrants.members[i]] = best;
  }
  return out;
}

PriceProfile marginal_from_table(const Coalition& entrants, const std::vector<Real>& u) {
  const int n = entrants.size();
  const std::uint32_t full = (1u << n) - 1;
  PriceProfile out;
  for (int i = 0; i < n; ++i)
    out.prices[entrants.members[i]] = u[full] - u[full & ~(1u << i)];
  return out;
}

}  // namespace

PriceProfile psi_map(const PriceProfile& p, const Coalition& entrants, const MarketConfig& cfg) {
  if (entrants.empty()) throw std::invalid_argument("psi_map: no entrants");
  return psi_from_table(p, entrants, subset_utilities(entrants, cfg));
}

PriceProfile marginal_prices(const Coalition& entrants, const MarketConfig& cfg) {
  if (entrants.empty()) throw std::invalid_argument("marginal_prices: no entrants");
  return marginal_from_table(entrants, subset_utilities(entrants, cfg));
}

PriceSolution solve_prices(const Coalition& entrants, const MarketConfig& cfg) {
  if (entrants.empty()) throw std::invalid_argument("solve_prices: no entrants");
  const std::vector<Real> u = subset_utilities(entrants, cfg);
  const int n = entrants.size();

  PriceProfile p = marginal_from_table(entrants, u);
  Real p_hi = 0.0;
  for (const auto& [firm, price] : p.prices) p_hi = std::max(p_hi, price);
  const Real p_lo = -static_cast<Real>(n - 1) * p_hi;

  Real residual = std::numeric_limits<Real>::infinity();
  for (long it = 0; it <= kMaxIterations; ++it) {
    PriceProfile next = psi_from_table(p, entrants, u);
    residual = 0.0;
    for (const auto& [firm, price] : next.prices)
      residual = std::max(residual, std::abs(price - p.prices.at(firm)));
    if (residual <= kFixedPointTol) {
      // Fixed points are nonnegative whenever every model is worth at
      // least the outside option on its own. A negative component means
      // the consumer would not buy all models, so the characterization
      // does not apply to this market.
      for (const auto& [firm, price] : next.prices)
        if (price < -1e-12)
          throw std::domain_error(
              "solve_prices: fixed point has a negative price for firm " +
              std::to_string(firm) +
              "; the outside option is too high for an all-models-purchased equilibrium");
      return PriceSolution{std::move(next), residual, it};
    }
    for (auto& [firm, price] : p.prices) {
      price = (1.0 - kDamping) * price + kDamping * next.prices.at(firm);
      price = std::clamp(price, p_lo, p_hi);
    }
  }
  throw ConvergenceError("solve_prices: no fixed point after " +
                             std::to_string(kMaxIterations) +
                             " iterations (residual " + std::to_string(residual) + ")",
                         residual);
}

DmrResult check_dmr(const Coalition& universe, const MarketConfig& cfg) {
  require_capped(universe);
  const int n = universe.size();
  const std::vector<Real> u = subset_utilities(universe, cfg);

  for (std::uint32_t outer = 1; outer < (1u << n); ++outer) {
    // inner runs over nonempty subsets of outer.
    for (std::uint32_t inner = outer;; inner = (inner - 1) & outer) {
      if (inner != 0) {
        for (int j = 0; j < n; ++j) {
          const std::uint32_t bit = 1u << j;
          if (!(inner & bit)) continue;
          const Real gain_inner = u[inner] - u[inner & ~bit];
          const Real gain_outer = u[outer] - u[outer & ~bit];
          if (gain_inner < gain_outer - 1e-12) {
            DmrWitness w{outer, inner, universe.members[j], gain_inner, gain_outer};
            return DmrResult{false, w};
          }
        }
      }
      if (inner == 0) break;
    }
  }
  return DmrResult{true, std::nullopt};
}

SurplusReport surpluses(const Coalition& entrants, const PriceProfile& prices,
                        const MarketConfig& cfg) {
  SurplusReport rep;
  Real total_prices = 0.0;
  Real total_costs = 0.0;
  for (int i = 0; i < entrants.size(); ++i) {
    const int firm = entrants.members[i];
    const Real p = prices.prices.at(firm);
    rep.per_firm_profit[firm] = p - entrants.summaries[i].cost;
    rep.producer += rep.per_firm_profit[firm];
    total_prices += p;
    total_costs += entrants.summaries[i].cost;
  }
  const Real utility = combiner::coalition_utility(entrants, cfg);
  rep.consumer = utility - total_prices - cfg.outside_option;
  rep.total = utility - total_costs - cfg.outside_option;
  return rep;
}

EfficiencyAudit audit_efficiency(const std::vector<std::optional<ModelSummary>>& profile,
                                 const std::vector<std::vector<ModelSummary>>& deviation_sets,
                                 const MarketConfig& cfg) {
  if (profile.size() != deviation_sets.size())
    throw std::invalid_argument("audit_efficiency: profile and deviation sets must match");
  const int n_firms = static_cast<int>(profile.size());

  auto total_surplus = [&](const std::vector<std::optional<ModelSummary>>& actions) {
    std::vector<int> ids;
    std::vector<ModelSummary> models;
    Real costs = 0.0;
    for (int i = 0; i < n_firms; ++i) {
      if (actions[i]) {
        ids.push_back(i);
        models.push_back(*actions[i]);
        costs += actions[i]->cost;
      }
    }
    const combiner::Coalition entrants(std::move(ids), std::move(models));
    return combiner::coalition_utility(entrants, cfg) - costs - cfg.outside_option;
  };

  EfficiencyAudit audit;
  {
    std::vector<int> ids;
    std::vector<ModelSummary> models;
    for (int i = 0; i < n_firms; ++i) {
      if (profile[i]) {
        ids.push_back(i);
        models.push_back(*profile[i]);
      }
    }
    const combiner::Coalition entrants(std::move(ids), std::move(models));
    audit.dmr_ok = entrants.empty() || check_dmr(entrants, cfg).holds;
  }

  const Real base = total_surplus(profile);
  for (int firm = 0; firm < n_firms; ++firm) {
    std::vector<std::optional<ModelSummary>> actions = profile;
    // Exit, then every listed alternative model.
    for (int alt = -1; alt < static_cast<int>(deviation_sets[firm].size()); ++alt) {
      if (alt < 0) {
        actions[firm] = std::nullopt;
      } else {
        actions[firm] = deviation_sets[firm][alt];
      }
      const Real ts = total_surplus(actions);
      if (ts > base + 1e-12) {
        audit.efficient = false;
        audit.deviation = Deviation{firm, alt < 0 ? std::nullopt : std::optional<int>(alt),
                                    ts - base};
        return audit;
      }
    }
  }
  return audit;
}

}  // namespace predmkt::pricing
