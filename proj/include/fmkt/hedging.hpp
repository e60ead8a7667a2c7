#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fmkt/arbitrage.hpp"

namespace fmkt {

// Spot cash flow D_t on every node (width 1).
struct DerivativeContract {
  std::string name;
  NodeVector cashflows;
};

DerivativeContract derivative_from_json(const ScenarioTree& tree, const nlohmann::json& doc);
nlohmann::json derivative_to_json(const ScenarioTree& tree, const DerivativeContract& d);

// sum_{u > time(n)} D_u / B_u along each path, for the leaves under n.
std::vector<double> discounted_claim(const MarketModel& m, const DerivativeContract& d, NodeId n);

enum class PriceSide { Ask, Bid };
enum class MeasureSet {
  FromT,     // measures risk-neutral for trading from t on
  FromZero,  // measures risk-neutral for trading from 0 on
};

struct NodePrice {
  NodeId node = 0;
  double price = 0.0;               // discounted
  NodeVector hedge;                 // risky legs, zero outside the node's subtree
  std::vector<NodeId> leaves;       // leaves under the node
  std::vector<double> measure;      // conditional leaf probabilities
};

struct PriceBounds {
  int t = 0;
  PriceSide side = PriceSide::Ask;
  std::vector<NodePrice> nodes;  // nodes_at(t) order
};

struct HedgeOptions {
  bool assume_no_arbitrage = false;
  double tol = kDefaultTolerance;
};

// min W s.t. S - W <= G x on each time-t subtree, E x = 0, x >= 0.
PriceBounds superhedge_ask(const MarketModel& m, const DerivativeContract& d, int t,
                           const HedgeOptions& opt = {});
// -superhedge_ask(-D).
PriceBounds subhedge_bid(const MarketModel& m, const DerivativeContract& d, int t,
                         const HedgeOptions& opt = {});

// sup (Ask) or inf (Bid) of E_q[S | node] over risk-neutral q, solved as an
// explicit LP in (q, mu). `hedge` is left empty.
PriceBounds dual_price_bound(const MarketModel& m, const DerivativeContract& d, int t,
                             PriceSide side, const HedgeOptions& opt = {},
                             MeasureSet set = MeasureSet::FromT);

enum class ExtendedSide { A, B };

struct ExtendedArbitrage {
  std::vector<double> xi;  // derivative position per time-t node
  TradingStrategy strategy;
  std::vector<NodeId> leaves;
  std::vector<double> leaf_values;
  double margin = 0.0;
};

// NA check on the time-t cone extended by a buy-and-hold (A) or
// sell-and-hold (B) position in D at price w per time-t node.
std::optional<ExtendedArbitrage> extended_cone_check(const MarketModel& m, const DerivativeContract& d,
                                                     int t, const std::vector<double>& w,
                                                     ExtendedSide side, double tol = kDefaultTolerance);

// The extended cone itself, for efficient-friction checks.
ConeLP extended_cone(const MarketModel& m, const DerivativeContract& d, int t,
                     const std::vector<double>& w, ExtendedSide side);

}  // namespace fmkt
