#pragma once

#include <optional>
#include <vector>

#include "fmkt/market.hpp"

namespace fmkt {

// Predictable holdings: the position carried from node n (time t) into
// period t+1 is stored on n. Entries on leaves are unused.
struct TradingStrategy {
  NodeVector cash;   // width 1
  NodeVector risky;  // width N
};

TradingStrategy zero_strategy(const MarketModel& m);

// Cost of acquiring `delta` units at a node: delta * (ask if delta >= 0 else bid).
inline double trade_cost(double delta, double ask, double bid) {
  return delta >= 0.0 ? delta * ask : delta * bid;
}
// Liquidation proceeds of a holding h: h * (bid if h >= 0 else ask).
inline double liquidation_value(double h, double ask, double bid) {
  return h >= 0.0 ? h * bid : h * ask;
}
// Dividend accrued by a holding h: long earns the ask increment, short pays the bid one.
inline double dividend_value(double h, double div_ask, double div_bid) {
  return h >= 0.0 ? h * div_ask : h * div_bid;
}

// V_t on every node (width 1).
NodeVector value_process(const MarketModel& m, const TradingStrategy& phi);
// V_t / B_t on every node.
NodeVector discounted_value_process(const MarketModel& m, const TradingStrategy& phi);

struct SelfFinancingCheck {
  bool ok = true;
  std::optional<NodeId> node;  // first violating node in preorder
  double residual = 0.0;
  explicit operator bool() const noexcept { return ok; }
};

inline constexpr double kDefaultTolerance = 1e-9;

SelfFinancingCheck is_self_financing(const MarketModel& m, const TradingStrategy& phi,
                                     double tol = kDefaultTolerance);

// The self-financing strategy with risky legs `psi` and initial value v0.
TradingStrategy complete_cash_leg(const MarketModel& m, const NodeVector& psi, double v0);

// Strategy with risky legs phi + psi whose cash leg starts from the sum of the
// two initial cash positions and then follows the self-financing recursion.
// Throws PreconditionError unless both inputs are self-financing with V_0 = 0.
TradingStrategy combine(const MarketModel& m, const TradingStrategy& phi,
                        const TradingStrategy& psi, double tol = kDefaultTolerance);

// Discounted terminal value per leaf (in tree leaves() order) of the
// zero-cost self-financing strategy with risky legs psi. psi must vanish on
// nodes before `start`.
std::vector<double> payoff_F(const MarketModel& m, const NodeVector& psi, int start = 0);

// {"strategy": {nodeId: {"cash": x, "risky": [...]}}}, decision nodes only.
nlohmann::json strategy_to_json(const MarketModel& m, const TradingStrategy& phi);
TradingStrategy strategy_from_json(const MarketModel& m, const nlohmann::json& doc);

}  // namespace fmkt
