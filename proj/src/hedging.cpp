#include "fmkt/hedging.hpp"

#include <algorithm>
#include <cmath>

#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

void check_time(const MarketModel& m, int t) {
  if (t < 0 || t >= m.tree().horizon()) {
    throw std::invalid_argument("time " + std::to_string(t) + " outside 0.." +
                                std::to_string(m.tree().horizon() - 1));
  }
}

void require_na(const MarketModel& m, int t, const HedgeOptions& opt) {
  if (opt.assume_no_arbitrage) return;
  if (check_no_arbitrage(m, t, opt.tol)) {
    throw PreconditionError("market admits arbitrage from time " + std::to_string(t) +
                            "; price bounds are not finite");
  }
}

// Columns of the cone as (row-of-LP, coefficient) lists for G' q + E' mu <= 0.
void add_dual_feasibility(LinearProgram& lp, const ConeLP& cone, const std::vector<std::size_t>& qvar,
                          std::size_t mu0) {
  std::vector<Terms> cols(cone.num_vars());
  for (std::size_t l = 0; l < cone.num_leaves(); ++l) {
    for (std::size_t k = 0; k < cone.num_vars(); ++k) {
      if (cone.g(l, k) != 0.0) cols[k].emplace_back(qvar[l], cone.g(l, k));
    }
  }
  for (std::size_t r = 0; r < cone.balance_rows().size(); ++r) {
    for (const auto& [k, a] : cone.balance_rows()[r]) cols[k].emplace_back(mu0 + r, a);
  }
  for (const Terms& c : cols) lp.add_row(RowType::LessEqual, c, 0.0);
}

}  // namespace

DerivativeContract derivative_from_json(const ScenarioTree& tree, const nlohmann::json& doc) {
  DerivativeContract d{doc.value("name", std::string("derivative")), NodeVector(tree.size(), 1)};
  if (!doc.contains("cashflows") || !doc["cashflows"].is_object()) {
    throw ValidationError(ValidationError::Kind::Malformed, "", "derivative document needs \"cashflows\"");
  }
  for (const auto& [id, v] : doc["cashflows"].items()) {
    const auto n = tree.find(id);
    if (!n) throw ValidationError(ValidationError::Kind::Malformed, id, "cash flow at unknown node " + id);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ValidationError(ValidationError::Kind::Malformed, id, "cash flow at node " + id + " is not a number");
    }
    d.cashflows(*n, 0) = v.get<double>();
  }
  return d;
}

nlohmann::json derivative_to_json(const ScenarioTree& tree, const DerivativeContract& d) {
  nlohmann::json cf = nlohmann::json::object();
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (d.cashflows(n, 0) != 0.0) cf[tree.name(n)] = d.cashflows(n, 0);
  }
  return {{"name", d.name}, {"cashflows", cf}};
}

std::vector<double> discounted_claim(const MarketModel& m, const DerivativeContract& d, NodeId n) {
  const auto& tree = m.tree();
  if (d.cashflows.nodes() != tree.size() || d.cashflows.width() != 1) {
    throw ValidationError(ValidationError::Kind::ShapeMismatch, "", "derivative does not match tree");
  }
  std::vector<double> out;
  for (NodeId l : tree.leaves_under(n)) {
    double s = 0.0;
    for (NodeId k = l; k != n; k = *tree.node(k).parent) s += d.cashflows(k, 0) / m.savings_at(k);
    out.push_back(s);
  }
  return out;
}

PriceBounds superhedge_ask(const MarketModel& m, const DerivativeContract& d, int t,
                           const HedgeOptions& opt) {
  check_time(m, t);
  require_na(m, t, opt);
  const auto& tree = m.tree();
  PriceBounds out{t, PriceSide::Ask, {}};
  for (NodeId n : tree.nodes_at(t)) {
    const ConeLP cone = build_subtree_cone(m, n);
    const std::vector<double> S = discounted_claim(m, d, n);
    LinearProgram lp(Sense::Minimize);
    for (std::size_t k = 0; k < cone.num_vars(); ++k) lp.add_variable();
    const std::size_t w = lp.add_variable(1.0, Bound::Free);
    std::vector<std::size_t> leaf_rows;
    for (std::size_t l = 0; l < cone.num_leaves(); ++l) {
      Terms r{{w, -1.0}};
      for (std::size_t k = 0; k < cone.num_vars(); ++k) {
        if (cone.g(l, k) != 0.0) r.emplace_back(k, -cone.g(l, k));
      }
      leaf_rows.push_back(lp.add_row(RowType::LessEqual, r, -S[l]));
    }
    for (const Terms& row : cone.balance_rows()) lp.add_row(RowType::Equal, row, 0.0);

    const LPSolution s = solve_lp(lp);
    if (s.status == LPStatus::Unbounded) {
      throw PreconditionError("superhedging LP unbounded at node " + tree.name(n) +
                              ": the market admits arbitrage");
    }
    if (s.status != LPStatus::Optimal) {
      throw SolverError("superhedging LP " + std::string(to_string(s.status)) + " at node " +
                        tree.name(n));
    }
    NodePrice np;
    np.node = n;
    np.price = s.x[w];
    std::vector<double> x(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(cone.num_vars()));
    np.hedge = cone.net_position(x);
    np.leaves = cone.leaves();
    double mass = 0.0;
    for (std::size_t r : leaf_rows) {
      np.measure.push_back(std::max(0.0, -s.dual[r]));
      mass += np.measure.back();
    }
    if (mass > 0.0) {
      for (double& p : np.measure) p /= mass;
    }

    // Attainment through the strategy's own payoff, not LP residuals.
    const auto f = payoff_F(m, np.hedge, t);
    for (std::size_t l = 0; l < np.leaves.size(); ++l) {
      const double v = f[tree.leaf_position(np.leaves[l])];
      if (S[l] > v + np.price + opt.tol * std::max(1.0, std::abs(S[l]))) {
        throw SolverError("superhedge fails to dominate the claim at leaf " + tree.name(np.leaves[l]));
      }
    }
    out.nodes.push_back(std::move(np));
  }
  return out;
}

PriceBounds subhedge_bid(const MarketModel& m, const DerivativeContract& d, int t,
                         const HedgeOptions& opt) {
  DerivativeContract neg = d;
  for (double& v : neg.cashflows.raw()) v = -v;
  PriceBounds b = superhedge_ask(m, neg, t, opt);
  b.side = PriceSide::Bid;
  for (NodePrice& np : b.nodes) np.price = -np.price;
  return b;
}

PriceBounds dual_price_bound(const MarketModel& m, const DerivativeContract& d, int t,
                             PriceSide side, const HedgeOptions& opt, MeasureSet set) {
  check_time(m, t);
  require_na(m, t, opt);
  const auto& tree = m.tree();
  PriceBounds out{t, side, {}};
  const Sense sense = side == PriceSide::Ask ? Sense::Maximize : Sense::Minimize;
  for (NodeId n : tree.nodes_at(t)) {
    const ConeLP cone = set == MeasureSet::FromT ? build_subtree_cone(m, n) : build_cone(m, 0);
    const std::vector<double> S = discounted_claim(m, d, n);
    const auto under = tree.leaves_under(n);
    LinearProgram lp(sense);
    std::vector<std::size_t> qvar;
    for (NodeId l : cone.leaves()) {
      double c = 0.0;
      const auto it = std::find(under.begin(), under.end(), l);
      if (it != under.end()) c = S[static_cast<std::size_t>(it - under.begin())];
      qvar.push_back(lp.add_variable(c));
    }
    const std::size_t mu0 = lp.num_variables();
    for (std::size_t r = 0; r < cone.balance_rows().size(); ++r) lp.add_variable(0.0, Bound::Free);
    add_dual_feasibility(lp, cone, qvar, mu0);
    // Conditional normalization: unit mass on the node's leaves.
    Terms norm;
    for (std::size_t l = 0; l < cone.num_leaves(); ++l) {
      if (std::find(under.begin(), under.end(), cone.leaves()[l]) != under.end()) {
        norm.emplace_back(qvar[l], 1.0);
      }
    }
    lp.add_row(RowType::Equal, norm, 1.0);

    const LPSolution s = solve_lp(lp);
    if (s.status != LPStatus::Optimal) {
      throw SolverError("dual bound LP " + std::string(to_string(s.status)) + " at node " + tree.name(n));
    }
    NodePrice np;
    np.node = n;
    np.price = s.objective;
    np.leaves = under;
    for (NodeId l : under) {
      const auto it = std::find(cone.leaves().begin(), cone.leaves().end(), l);
      np.measure.push_back(std::max(0.0, s.x[qvar[static_cast<std::size_t>(it - cone.leaves().begin())]]));
    }
    out.nodes.push_back(std::move(np));
  }
  return out;
}

ConeLP extended_cone(const MarketModel& m, const DerivativeContract& d, int t,
                     const std::vector<double>& w, ExtendedSide side) {
  check_time(m, t);
  const auto& tree = m.tree();
  const auto roots = tree.nodes_at(t);
  if (w.size() != roots.size()) {
    throw std::invalid_argument("need one price per time-" + std::to_string(t) + " node");
  }
  ConeLP cone = build_cone(m, t);
  const double sgn = side == ExtendedSide::A ? 1.0 : -1.0;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const auto S = discounted_claim(m, d, roots[i]);
    const auto under = tree.leaves_under(roots[i]);
    std::vector<double> col(cone.num_leaves(), 0.0);
    for (std::size_t l = 0; l < cone.num_leaves(); ++l) {
      const auto it = std::find(under.begin(), under.end(), cone.leaves()[l]);
      if (it != under.end()) col[l] = sgn * (S[static_cast<std::size_t>(it - under.begin())] - w[i]);
    }
    cone.add_payoff_column(col);
  }
  return cone;
}

std::optional<ExtendedArbitrage> extended_cone_check(const MarketModel& m, const DerivativeContract& d,
                                                     int t, const std::vector<double>& w,
                                                     ExtendedSide side, double tol) {
  const ConeLP cone = extended_cone(m, d, t, w, side);
  const auto found = find_cone_arbitrage(cone, tol);
  if (!found) return std::nullopt;

  NodeVector psi = cone.net_position(found->x);
  std::vector<double> xi(found->x.begin() + static_cast<std::ptrdiff_t>(cone.num_base_vars()),
                         found->x.end());
  double scale = 0.0;
  for (double v : psi.raw()) scale = std::max(scale, std::abs(v));
  for (double v : xi) scale = std::max(scale, v);
  if (!(scale > 0.0)) throw SolverError("extended arbitrage LP optimum has no position");
  for (double& v : psi.raw()) v /= scale;
  for (double& v : xi) v /= scale;

  ExtendedArbitrage a;
  a.xi = xi;
  a.strategy = complete_cash_leg(m, psi, 0.0);
  a.leaves = cone.leaves();
  const auto f = payoff_F(m, psi, t);
  a.leaf_values.assign(f.begin(), f.end());
  const std::size_t base = cone.num_base_vars();
  for (std::size_t l = 0; l < a.leaves.size(); ++l) {
    for (std::size_t i = 0; i < xi.size(); ++i) a.leaf_values[l] += xi[i] * cone.g(l, base + i);
  }
  a.margin = *std::max_element(a.leaf_values.begin(), a.leaf_values.end());
  bool ok = a.margin > tol && is_self_financing(m, a.strategy).ok;
  for (double v : a.leaf_values) ok = ok && v >= -tol;
  if (!ok) throw SolverError("extended-cone certificate failed re-verification");
  return a;
}

}  // namespace fmkt
