#pragma once

#include <random>
#include <string>

#include "fmkt/cps.hpp"
#include "fmkt/hedging.hpp"
#include "fmkt/market.hpp"

namespace fmkt::testing {

using Rng = std::mt19937_64;

nlohmann::json read_fixture(const std::string& name);
MarketModel load_fixture_market(const std::string& name);

double uniform(Rng& rng, double lo, double hi);
bool coin(Rng& rng, double p);

// Tree with the given horizon; every non-terminal node gets between
// min_branch and max_branch children with random conditional probabilities.
ScenarioTree random_tree(Rng& rng, int horizon, int min_branch, int max_branch);

struct MarketShape {
  int max_horizon = 3;
  int max_branch = 3;
  int max_securities = 2;
  bool allow_rates = true;
};

// Random-walk quotes with nonnegative (sometimes zero) spreads. May or may
// not admit arbitrage.
MarketModel random_market(Rng& rng, const MarketShape& shape = {});

struct NaMarket {
  MarketModel market;
  ConsistentPricingSystem cps;
};

// Quotes bracketing a randomly drawn pricing system, so NA holds by
// construction. With zero_dividend_spread the dividend brackets collapse.
NaMarket random_na_market(Rng& rng, const MarketShape& shape, bool zero_dividend_spread);

// One period, one security, 2 or 3 leaves whose mid prices differ by at
// least 0.5 and move at most 3 from the root; half-spreads at most 0.1.
MarketModel random_one_period(Rng& rng);

// Random risky holdings on decision nodes at or after `start`.
NodeVector random_holdings(Rng& rng, const MarketModel& m, int start = 0, double zero_prob = 0.2);

DerivativeContract random_derivative(Rng& rng, const MarketModel& m, double lo = -1.0, double hi = 1.0);

}  // namespace fmkt::testing
