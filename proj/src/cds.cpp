#include "fmkt/cds.hpp"

#include <cmath>

#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

using Kind = ValidationError::Kind;

std::vector<double> savings_path(const std::vector<double>& rates) {
  std::vector<double> b;
  double acc = 1.0;
  for (double r : rates) {
    acc *= 1.0 + r;
    b.push_back(acc);
  }
  return b;
}

// E_q[sum_{u > t} a_u | n] on every node, by backward induction.
NodeVector future_sum(const ScenarioTree& tree, const Measure& q, const std::vector<double>& a) {
  NodeVector out(tree.size(), 1);
  for (NodeId n = tree.size(); n-- > 0;) {
    if (tree.is_leaf(n)) continue;
    out(n, 0) = expect_children(tree, q, n, [&](NodeId c) { return a[c] + out(c, 0); });
  }
  return out;
}

}  // namespace

CdsSpec make_cds_spec(ScenarioTree tree, std::vector<double> rates, std::vector<bool> defaulted,
                      double delta, double kappa_ask, double kappa_bid, std::optional<Measure> pricing) {
  if (rates.size() != static_cast<std::size_t>(tree.horizon()) + 1) {
    throw ValidationError(Kind::ShapeMismatch, "", "rate path length does not match horizon");
  }
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError(Kind::NegativeRate, "", "rates must be nonnegative");
  }
  if (defaulted.size() != tree.size()) {
    throw ValidationError(Kind::ShapeMismatch, "", "default indicator does not match tree");
  }
  for (double v : {delta, kappa_ask, kappa_bid}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError(Kind::Malformed, "", "delta and spreads must be finite and nonnegative");
    }
  }
  if (kappa_bid > kappa_ask) {
    throw ValidationError(Kind::SpreadOrder, "", "kappaBid exceeds kappaAsk");
  }
  if (defaulted[tree.root()]) {
    throw ValidationError(Kind::NonAbsorbingDefault, tree.name(tree.root()),
                          "default cannot occur at the root");
  }
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (n == tree.root()) continue;
    if (defaulted[*tree.node(n).parent] && !defaulted[n]) {
      throw ValidationError(Kind::NonAbsorbingDefault, tree.name(n),
                            "default is not absorbing at node " + tree.name(n));
    }
  }
  CdsSpec s;
  s.pricing = pricing ? std::move(*pricing) : Measure::physical(tree);
  if (s.pricing.conditional().size() != tree.size()) {
    throw ValidationError(Kind::ShapeMismatch, "", "pricing measure does not match tree");
  }
  s.tree = std::move(tree);
  s.rates = std::move(rates);
  s.defaulted = std::move(defaulted);
  s.delta = delta;
  s.kappa_ask = kappa_ask;
  s.kappa_bid = kappa_bid;
  return s;
}

CdsSpec cds_spec_from_json(const nlohmann::json& doc) {
  try {
    const auto& tdoc = doc.at("tree");
    ScenarioTree tree = ScenarioTree::from_json(tdoc);
    std::vector<double> rates = tdoc.contains("rates") ? tdoc["rates"].get<std::vector<double>>()
                                : doc.contains("rates")
                                    ? doc["rates"].get<std::vector<double>>()
                                    : std::vector<double>(static_cast<std::size_t>(tree.horizon()) + 1, 0.0);
    std::vector<bool> defaulted(tree.size(), false);
    for (const auto& id : doc.value("defaultNodes", std::vector<std::string>{})) {
      defaulted[tree.index_of(id)] = true;
    }
    std::optional<Measure> pricing;
    if (doc.contains("pricingProbs")) {
      std::vector<double> c(tree.size(), 0.0);
      for (NodeId n = 0; n < tree.size(); ++n) c[n] = tree.node(n).prob;
      for (const auto& [id, v] : doc["pricingProbs"].items()) c[tree.index_of(id)] = v.get<double>();
      pricing = Measure::from_conditional(tree, std::move(c));
    }
    return make_cds_spec(std::move(tree), std::move(rates), std::move(defaulted),
                         doc.at("delta").get<double>(), doc.at("kappaAsk").get<double>(),
                         doc.at("kappaBid").get<double>(), std::move(pricing));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(Kind::Malformed, "", std::string("malformed CDS spec: ") + e.what());
  }
}

double cds_increment(const CdsSpec& spec, NodeId n, double kappa) {
  const auto& tree = spec.tree;
  if (n == tree.root()) return 0.0;
  const bool now = spec.defaulted[n];
  const bool before = spec.defaulted[*tree.node(n).parent];
  if (now && !before) return spec.delta;
  if (!now) return -kappa;
  return 0.0;
}

MarketModel make_cds_market(const CdsSpec& spec) {
  const auto& tree = spec.tree;
  const auto B = savings_path(spec.rates);
  std::vector<double> a_ask(tree.size()), a_bid(tree.size());
  for (NodeId n = 0; n < tree.size(); ++n) {
    const double b = B[static_cast<std::size_t>(tree.time(n))];
    a_ask[n] = cds_increment(spec, n, spec.kappa_ask) / b;
    a_bid[n] = cds_increment(spec, n, spec.kappa_bid) / b;
  }
  const NodeVector p_ask = future_sum(tree, spec.pricing, a_bid);
  const NodeVector p_bid = future_sum(tree, spec.pricing, a_ask);
  Quotes q = make_quotes(tree, 1);
  for (NodeId n = 0; n < tree.size(); ++n) {
    const double b = B[static_cast<std::size_t>(tree.time(n))];
    q.ask(n, 0) = p_ask(n, 0) * b;
    q.bid(n, 0) = p_bid(n, 0) * b;
    if (n != tree.root()) {
      q.div_ask(n, 0) = cds_increment(spec, n, spec.kappa_ask);
      q.div_bid(n, 0) = cds_increment(spec, n, spec.kappa_bid);
    }
  }
  return MarketModel::build(tree, spec.rates, {"CDS"}, std::move(q));
}

ConsistentPricingSystem make_cds_cps(const CdsSpec& spec, double kappa) {
  if (!(kappa >= spec.kappa_bid && kappa <= spec.kappa_ask)) {
    throw PreconditionError("kappa must lie in [kappaBid, kappaAsk]");
  }
  const auto& tree = spec.tree;
  const auto B = savings_path(spec.rates);
  std::vector<double> a(tree.size());
  for (NodeId n = 0; n < tree.size(); ++n) {
    a[n] = cds_increment(spec, n, kappa) / B[static_cast<std::size_t>(tree.time(n))];
  }
  ConsistentPricingSystem c;
  c.q = spec.pricing.leaf_probabilities(tree);
  c.P = future_sum(tree, spec.pricing, a);
  c.A = NodeVector(tree.size(), 1);
  c.M = NodeVector(tree.size(), 1);
  std::vector<double> cum(tree.size(), 0.0);
  for (NodeId n = 0; n < tree.size(); ++n) {
    c.A(n, 0) = a[n];
    if (n != tree.root()) cum[n] = cum[*tree.node(n).parent] + a[n];
    c.M(n, 0) = c.P(n, 0) + cum[n];
  }
  return c;
}

}  // namespace fmkt
