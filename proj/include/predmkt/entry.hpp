#pragma once

#include <string>
#include <vector>

#include "predmkt/types.hpp"

namespace predmkt::entry {

/// Market in which every potential entrant trains the same model (bias B,
/// variance V) on its own independent dataset.
struct SymmetricMarket {
  Real B = 0.0;
  Real V = 0.0;
  Real sigma2 = 1.0;
  Real cost = 0.25;
  Real outside_option = -5.0;
  int n_firms = 10;
};

/// Standing assumptions of the symmetric entry analysis. The closed forms
/// below are evaluated regardless; callers decide how to surface failures
/// (sweeps record them per row).
std::vector<std::string> assumption_failures(const SymmetricMarket& m);

/// Number of entrants: 1 when V < 2c, otherwise the largest j with
/// V / (j(j-1)) >= c. Indifferent firms enter.
int entry_count(const SymmetricMarket& m);

struct EntryOutcome {
  int n_entrants = 0;
  Real price = 0.0;
  Real consumer = 0.0;
  Real producer = 0.0;
  Real total = 0.0;
};

/// Equilibrium price and surpluses of the symmetric entry game.
EntryOutcome equilibrium(const SymmetricMarket& m);

struct SweepRow {
  Real V = 0.0;
  EntryOutcome outcome;
  std::vector<std::string> violations;
};

/// One equilibrium row per grid value of V; assumption failures are
/// recorded in the row, never fatal.
std::vector<SweepRow> sweep_variance(const std::vector<Real>& grid, const SymmetricMarket& base);

struct CrossCheck {
  bool ok = true;
  std::string detail;
};

/// Rebuilds the market as explicit model summaries and confirms that the
/// generic pricing machinery reproduces the closed forms: marginal prices,
/// surpluses, and entry optimality (every price >= c at N_E, some price
/// < c at N_E + 1).
CrossCheck crosscheck_with_pricing(const SymmetricMarket& m);

}  // namespace predmkt::entry
