#pragma once

#include <string>
#include <vector>

#include "fmkt/scenario_tree.hpp"
#include "json.hpp"

namespace fmkt {

// Per-node quotes of all securities, each an (nodes x N) array. Dividend
// increments are zero at the root.
struct Quotes {
  NodeVector ask, bid, div_ask, div_bid;
};

// Quotes divided by the savings account at the node's time.
using DiscountedQuotes = Quotes;

class MarketModel {
 public:
  MarketModel() = default;

  // Validates rates and the bid-ask orderings; throws ValidationError.
  static MarketModel build(ScenarioTree tree, std::vector<double> rates,
                           std::vector<std::string> names, Quotes quotes);
  static MarketModel from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const ScenarioTree& tree() const noexcept { return tree_; }
  std::size_t num_securities() const noexcept { return names_.size(); }
  const std::string& security_name(std::size_t j) const { return names_.at(j); }
  const std::vector<double>& rates() const noexcept { return rates_; }

  // B_t = prod_{s<=t} (1 + r_s).
  double savings(int t) const { return savings_.at(static_cast<std::size_t>(t)); }
  double savings_at(NodeId n) const { return savings(tree_.time(n)); }

  const Quotes& quotes() const noexcept { return raw_; }
  const DiscountedQuotes& discounted() const noexcept { return disc_; }

  double ask(NodeId n, std::size_t j) const { return raw_.ask(n, j); }
  double bid(NodeId n, std::size_t j) const { return raw_.bid(n, j); }
  double div_ask(NodeId n, std::size_t j) const { return raw_.div_ask(n, j); }
  double div_bid(NodeId n, std::size_t j) const { return raw_.div_bid(n, j); }

 private:
  ScenarioTree tree_;
  std::vector<double> rates_;
  std::vector<double> savings_;
  std::vector<std::string> names_;
  Quotes raw_;
  DiscountedQuotes disc_;
};

DiscountedQuotes discounted_quotes(const MarketModel& m);

// Zero-filled quote arrays shaped for `tree` and `n` securities.
Quotes make_quotes(const ScenarioTree& tree, std::size_t n);

}  // namespace fmkt
