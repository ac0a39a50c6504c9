#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "predmkt/combiner.hpp"
#include "predmkt/models.hpp"
#include "predmkt/types.hpp"

namespace predmkt::pricing {

using combiner::Coalition;

struct PriceProfile {
  std::map<int, Real> prices;  // firm index -> price

  Real at(int firm) const { return prices.at(firm); }
  Real total() const;
};

struct SurplusReport {
  Real consumer = 0.0;
  Real producer = 0.0;
  Real total = 0.0;
  std::map<int, Real> per_firm_profit;
};

/// Thrown when the damped price iteration fails to settle.
struct ConvergenceError : std::runtime_error {
  Real residual;
  ConvergenceError(const std::string& what, Real res) : std::runtime_error(what), residual(res) {}
};

/// Utilities U(E') for every subset of the coalition, indexed by bitmask
/// over coalition positions. U(empty) is the outside option.
std::vector<Real> subset_utilities(const Coalition& entrants, const MarketConfig& cfg);

/// One application of the price map: Psi_i(p) is the smallest price that
/// keeps the consumer weakly preferring to buy everything over dropping
/// firm i and keeping any subset E' of the others.
PriceProfile psi_map(const PriceProfile& p, const Coalition& entrants, const MarketConfig& cfg);

struct PriceSolution {
  PriceProfile prices;
  Real residual = 0.0;
  long iterations = 0;
};

/// Fixed point of psi_map by damped iteration (gamma = 0.5) from the
/// marginal-contribution profile, projected into the bracket
/// [-(|E|-1)*pbar, pbar] with pbar the largest marginal contribution.
/// Converged when max |Psi(p) - p| <= 1e-10; throws ConvergenceError after
/// 1e5 iterations.
PriceSolution solve_prices(const Coalition& entrants, const MarketConfig& cfg);

/// p_i = U(E) - U(E \ {i}); coincides with the fixed point under
/// decreasing marginal returns.
PriceProfile marginal_prices(const Coalition& entrants, const MarketConfig& cfg);

struct DmrWitness {
  std::uint32_t outer_mask = 0;  // E
  std::uint32_t inner_mask = 0;  // E' subset of E
  int firm = -1;                 // j in E'
  Real inner_gain = 0.0;         // U(E') - U(E' \ {j})
  Real outer_gain = 0.0;         // U(E)  - U(E  \ {j})
};

struct DmrResult {
  bool holds = true;
  std::optional<DmrWitness> witness;
};

/// Exhaustive decreasing-marginal-returns check over all nested subset
/// pairs of the universe; returns the first violating triple if any.
DmrResult check_dmr(const Coalition& universe, const MarketConfig& cfg);

/// Consumer surplus U(E) - sum p - outside, per-firm profits p_i - c_i,
/// and total surplus U(E) - sum costs - outside.
SurplusReport surpluses(const Coalition& entrants, const PriceProfile& prices,
                        const MarketConfig& cfg);

struct Deviation {
  int firm = -1;
  std::optional<int> model_index;  // nullopt = exit
  Real surplus_gain = 0.0;
};

struct EfficiencyAudit {
  bool efficient = true;
  bool dmr_ok = true;  // audit is unreliable when DMR fails on the profile
  std::optional<Deviation> deviation;
};

/// No-deviation audit of a model profile: under decreasing marginal
/// returns a unilateral deviation is profitable exactly when it raises
/// total surplus, so each firm's alternatives (including exit) are scored
/// by the total-surplus change.
EfficiencyAudit audit_efficiency(const std::vector<std::optional<ModelSummary>>& profile,
                                 const std::vector<std::vector<ModelSummary>>& deviation_sets,
                                 const MarketConfig& cfg);

}  // namespace predmkt::pricing
