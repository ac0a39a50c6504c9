#include "predmkt/entry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "predmkt/combiner.hpp"
#include "predmkt/pricing.hpp"

namespace predmkt::entry {

namespace {

void require_valid(const SymmetricMarket& m) {
  if (!(m.B >= 0.0) || !(m.V >= 0.0) || !(m.sigma2 >= 0.0))
    throw std::invalid_argument("SymmetricMarket: B, V, sigma2 must be >= 0");
  if (!(m.cost > 0.0)) throw std::invalid_argument("SymmetricMarket: cost must be > 0");
  if (!(m.outside_option < 0.0))
    throw std::invalid_argument("SymmetricMarket: outside option must be < 0");
  if (m.n_firms < 1) throw std::invalid_argument("SymmetricMarket: need at least one firm");
}

std::string fmt(Real x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

std::vector<std::string> assumption_failures(const SymmetricMarket& m) {
  require_valid(m);
  std::vector<std::string> fails;
  const Real n = static_cast<Real>(m.n_firms);
  if (m.n_firms < 2 || !(m.V / (n * (n - 1.0)) < m.cost))
    fails.push_back("potential entrants not large enough: V/(N(N-1)) >= c with N=" +
                    std::to_string(m.n_firms));
  if (!(m.outside_option < -m.B - m.V - m.sigma2 - m.cost))
    fails.push_back("outside option too high for guaranteed entry: u >= -B-V-sigma2-c = " +
                    fmt(-m.B - m.V - m.sigma2 - m.cost));
  if (!(m.outside_option < -m.B - 1.5 * m.V - m.sigma2))
    fails.push_back("outside option too high for decreasing marginal returns: u >= "
                    "-B-1.5V-sigma2 = " +
                    fmt(-m.B - 1.5 * m.V - m.sigma2));
  return fails;
}

int entry_count(const SymmetricMarket& m) {
  require_valid(m);
  if (m.V < 2.0 * m.cost) return 1;
  // Largest j with V/(j(j-1)) >= c; the >= resolves indifference toward entry.
  int j = 2;
  while (m.V / (static_cast<Real>(j + 1) * static_cast<Real>(j)) >= m.cost) ++j;
  return j;
}

EntryOutcome equilibrium(const SymmetricMarket& m) {
  EntryOutcome out;
  out.n_entrants = entry_count(m);
  const Real ne = static_cast<Real>(out.n_entrants);
  if (out.n_entrants == 1) {
    out.price = -m.B - m.V - m.sigma2 - m.outside_option;
    out.consumer = 0.0;
    out.producer = out.price - m.cost;
  } else {
    out.price = m.V / (ne * (ne - 1.0));
    out.consumer =
        -m.B - (2.0 * ne - 1.0) / (ne * (ne - 1.0)) * m.V - m.sigma2 - m.outside_option;
    out.producer = ne * (out.price - m.cost);
  }
  out.total = -m.B - m.V / ne - m.sigma2 - ne * m.cost - m.outside_option;
  return out;
}

std::vector<SweepRow> sweep_variance(const std::vector<Real>& grid, const SymmetricMarket& base) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (Real v : grid) {
    SymmetricMarket m = base;
    m.V = v;
    SweepRow row;
    row.V = v;
    row.violations = assumption_failures(m);
    row.outcome = equilibrium(m);
    rows.push_back(std::move(row));
  }
  return rows;
}

CrossCheck crosscheck_with_pricing(const SymmetricMarket& m) {
  constexpr Real tol = 1e-9;
  const EntryOutcome closed = equilibrium(m);
  if (closed.n_entrants > kCoalitionCap)
    return {false, "entrant count exceeds the coalition cap"};

  const MarketConfig cfg(m.sigma2, m.outside_option, m.n_firms);
  auto coalition_of = [&](int count) {
    Vector bias(1);
    bias(0) = std::sqrt(m.B);
    std::vector<int> ids;
    std::vector<ModelSummary> models;
    for (int i = 0; i < count; ++i) {
      ids.push_back(i);
      models.emplace_back(bias, m.V, m.cost);
    }
    return combiner::Coalition(std::move(ids), std::move(models));
  };

  const auto entrants = coalition_of(closed.n_entrants);
  const pricing::PriceProfile prices = pricing::marginal_prices(entrants, cfg);
  for (const auto& [firm, p] : prices.prices) {
    if (std::abs(p - closed.price) > tol)
      return {false, "marginal price " + std::to_string(p) + " != closed form " +
                         std::to_string(closed.price)};
    if (p < m.cost - tol)
      return {false, "price below cost at the equilibrium entrant count"};
  }

  const pricing::SurplusReport rep = pricing::surpluses(entrants, prices, cfg);
  if (std::abs(rep.consumer - closed.consumer) > tol ||
      std::abs(rep.producer - closed.producer) > tol ||
      std::abs(rep.total - closed.total) > tol)
    return {false, "surplus mismatch between pricing machinery and closed forms"};

  // Entry optimality: one more entrant would push some price below cost.
  if (closed.n_entrants + 1 <= std::min(m.n_firms, kCoalitionCap)) {
    const auto extra = coalition_of(closed.n_entrants + 1);
    const pricing::PriceProfile more = pricing::marginal_prices(extra, cfg);
    bool some_below = false;
    for (const auto& [firm, p] : more.prices) some_below = some_below || p < m.cost;
    if (!some_below) return {false, "entry at N_E + 1 would still be profitable"};
  }
  return {true, {}};
}

}  // namespace predmkt::entry
