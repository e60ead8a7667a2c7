#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fmkt/market.hpp"
#include "fmkt/portfolio.hpp"

namespace fmkt {

// Discounted auxiliary price P, dividend increment A and cumulative value
// M = P + sum A, each (nodes x N), together with a measure.
struct ConsistentPricingSystem {
  std::vector<double> q;  // absolute leaf probabilities, leaves() order
  NodeVector P, A, M;
};

struct SnellEnvelopes {
  NodeVector Ya, Yb, Xa, Xb;
};

// Backward induction under q (absolute leaf probabilities):
//   Yb_t = max(Pbid*_t, E[Aask*_{t+1} + Yb_{t+1}]),  Xb = Yb + sum Aask*
//   Ya_t = min(Pask*_t, E[Abid*_{t+1} + Ya_{t+1}]),  Xa = Ya + sum Abid*
SnellEnvelopes snell_envelopes(const MarketModel& m, const std::vector<double>& q);

struct CpsCheck {
  std::string name;
  bool ok = true;
  std::string node;  // first offender
  double residual = 0.0;
};

struct CpsReport {
  std::vector<CpsCheck> items;
  bool ok() const;
};

CpsReport verify_cps(const MarketModel& m, const ConsistentPricingSystem& c,
                     double tol = kDefaultTolerance);

struct CpsConstruction {
  ConsistentPricingSystem cps;
  NodeVector lambda;  // interpolation weight per decision node and security
};

// Requires zero dividend spread (1e-12) and a risk-neutral q; throws
// PreconditionError otherwise.
CpsConstruction build_cps_from_rn(const MarketModel& m, const std::vector<double>& q);

bool has_zero_dividend_spread(const MarketModel& m, double tol = 1e-12);

nlohmann::json cps_to_json(const MarketModel& m, const ConsistentPricingSystem& c);
ConsistentPricingSystem cps_from_json(const MarketModel& m, const nlohmann::json& doc);

}  // namespace fmkt
