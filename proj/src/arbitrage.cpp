#include "fmkt/arbitrage.hpp"

#include <algorithm>
#include <cmath>

#include "fmkt/cps.hpp"
#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

void require_optimal(const LPSolution& s, const char* what) {
  if (s.status != LPStatus::Optimal) {
    throw SolverError(std::string(what) + ": LP returned " + to_string(s.status));
  }
}

// Adds the cone's variables (x >= 0) and balance rows E x = 0 to `lp`.
std::size_t add_cone(LinearProgram& lp, const ConeLP& cone) {
  const std::size_t first = lp.num_variables();
  for (std::size_t k = 0; k < cone.num_vars(); ++k) lp.add_variable();
  for (const Terms& row : cone.balance_rows()) {
    Terms shifted;
    for (const auto& [k, a] : row) shifted.emplace_back(first + k, a);
    lp.add_row(RowType::Equal, shifted, 0.0);
  }
  return first;
}

Terms payoff_row(const ConeLP& cone, std::size_t leaf_row, std::size_t first) {
  Terms r;
  for (std::size_t k = 0; k < cone.num_vars(); ++k) {
    const double g = cone.g(leaf_row, k);
    if (g != 0.0) r.emplace_back(first + k, g);
  }
  return r;
}

// Conditional expectation at node n of f evaluated at the time-s descendants,
// with conditional weights from `cond`.
template <typename F>
double expect_at(const ScenarioTree& tree, const Measure& q, NodeId n, int s, F&& f) {
  if (tree.time(n) == s) return f(n);
  double acc = 0.0;
  for (NodeId c : tree.node(n).children) acc += q.conditional(c) * expect_at(tree, q, c, s, f);
  return acc;
}

}  // namespace

std::optional<ConeArbitrage> find_cone_arbitrage(const ConeLP& cone, double tol) {
  LinearProgram lp(Sense::Maximize);
  add_cone(lp, cone);
  Terms total;
  std::vector<double> colsum(cone.num_vars(), 0.0);
  for (std::size_t row = 0; row < cone.num_leaves(); ++row) {
    Terms r = payoff_row(cone, row, 0);
    for (const auto& [k, a] : r) colsum[k] += a;
    lp.add_row(RowType::GreaterEqual, r, 0.0);
  }
  for (std::size_t k = 0; k < cone.num_vars(); ++k) {
    if (colsum[k] != 0.0) total.emplace_back(k, colsum[k]);
    lp.set_cost(k, colsum[k]);
  }
  lp.add_row(RowType::LessEqual, total, 1.0);
  const LPSolution s = solve_lp(lp);
  require_optimal(s, "arbitrage search");
  if (s.objective <= tol) return std::nullopt;
  ConeArbitrage a;
  a.x = s.x;
  a.payoff = cone.payoff(s.x);
  a.objective = s.objective;
  return a;
}

std::optional<ArbitrageCertificate> check_no_arbitrage(const MarketModel& m, int t, double tol) {
  if (m.num_securities() == 0) return std::nullopt;
  const ConeLP cone = build_cone(m, t);
  const auto found = find_cone_arbitrage(cone, tol);
  if (!found) return std::nullopt;

  NodeVector psi = cone.net_position(found->x);
  double scale = 0.0;
  for (double v : psi.raw()) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0)) throw SolverError("arbitrage LP optimum has zero net position");
  for (double& v : psi.raw()) v /= scale;

  ArbitrageCertificate cert;
  cert.strategy = complete_cash_leg(m, psi, 0.0);
  const auto& tree = m.tree();
  cert.leaves.assign(tree.leaves().begin(), tree.leaves().end());
  const NodeVector v = discounted_value_process(m, cert.strategy);
  for (NodeId l : cert.leaves) cert.leaf_values.push_back(v(l, 0));
  cert.margin = *std::max_element(cert.leaf_values.begin(), cert.leaf_values.end());

  // Re-derive everything from the strategy itself rather than LP residuals.
  const double v0 = value_process(m, cert.strategy)(tree.root(), 0);
  const auto sf = is_self_financing(m, cert.strategy);
  const auto f = payoff_F(m, psi, t);
  bool ok = std::abs(v0) <= tol && sf.ok && cert.margin > tol;
  for (std::size_t i = 0; ok && i < f.size(); ++i) {
    ok = std::abs(f[i] - cert.leaf_values[i]) <= tol && cert.leaf_values[i] >= -tol;
  }
  if (!ok) throw SolverError("arbitrage certificate failed re-verification");
  return cert;
}

std::optional<RiskNeutralMeasure> find_risk_neutral_measure(const MarketModel& m, int t) {
  const ConeLP cone = build_cone(m, t);
  const std::size_t L = cone.num_leaves();
  LinearProgram lp(Sense::Maximize);
  for (std::size_t l = 0; l < L; ++l) lp.add_variable();
  const std::size_t mu0 = lp.num_variables();
  for (std::size_t r = 0; r < cone.balance_rows().size(); ++r) lp.add_variable(0.0, Bound::Free);
  const std::size_t eps = lp.add_variable(1.0, Bound::Free);

  std::vector<Terms> cols(cone.num_vars());
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < cone.num_vars(); ++k) {
      if (cone.g(l, k) != 0.0) cols[k].emplace_back(l, cone.g(l, k));
    }
  }
  for (std::size_t r = 0; r < cone.balance_rows().size(); ++r) {
    for (const auto& [k, a] : cone.balance_rows()[r]) cols[k].emplace_back(mu0 + r, a);
  }
  for (const Terms& c : cols) lp.add_row(RowType::LessEqual, c, 0.0);
  Terms norm;
  for (std::size_t l = 0; l < L; ++l) {
    lp.add_row(RowType::GreaterEqual, {{l, 1.0}, {eps, -1.0}}, 0.0);
    norm.emplace_back(l, 1.0);
  }
  lp.add_row(RowType::Equal, norm, 1.0);

  // No nonnegative q at all: the market admits a strict arbitrage.
  const LPSolution s = solve_lp(lp);
  if (s.status == LPStatus::Infeasible) return std::nullopt;
  require_optimal(s, "risk-neutral search");
  if (!(s.objective > 1e-10)) return std::nullopt;

  RiskNeutralMeasure out;
  out.leaves = cone.leaves();
  out.q.assign(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(L));
  double sum = 0.0;
  for (double& p : out.q) {
    p = std::max(p, 0.0);
    sum += p;
  }
  for (double& p : out.q) p /= sum;
  out.epsilon = *std::min_element(out.q.begin(), out.q.end());
  out.measure = Measure::from_leaf_probabilities(m.tree(), out.q);
  return out;
}

RiskNeutralCheck verify_risk_neutral(const MarketModel& m, const std::vector<double>& q, double tol) {
  const auto& tree = m.tree();
  RiskNeutralCheck out;
  if (q.size() != tree.leaves().size()) {
    out = {false, "measure has wrong number of leaves", 0.0};
    return out;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0.0)) {
      return {false, "measure not strictly positive at leaf " + tree.name(tree.leaves()[i]), q[i]};
    }
    sum += q[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) return {false, "measure does not sum to 1", sum};
  const Measure mq = Measure::from_leaf_probabilities(tree, q);
  const auto& d = m.discounted();

  // Named buy-and-hold / sell-and-hold generators.
  for (NodeId n = 0; n < tree.size(); ++n) {
    const int s = tree.time(n);
    if (s >= tree.horizon()) continue;
    for (std::size_t j = 0; j < m.num_securities(); ++j) {
      for (int u = s + 1; u <= tree.horizon(); ++u) {
        double long_div = 0.0, short_div = 0.0;
        for (int v = s + 1; v <= u; ++v) {
          long_div += expect_at(tree, mq, n, v, [&](NodeId k) { return d.div_ask(k, j); });
          short_div += expect_at(tree, mq, n, v, [&](NodeId k) { return d.div_bid(k, j); });
        }
        const double exit_bid = expect_at(tree, mq, n, u, [&](NodeId k) { return d.bid(k, j); });
        const double exit_ask = expect_at(tree, mq, n, u, [&](NodeId k) { return d.ask(k, j); });
        const std::string tail = "security " + std::to_string(j + 1) + " from " + tree.name(n) +
                                 (u < tree.horizon() ? " to t=" + std::to_string(u) : "");
        const double buy = -d.ask(n, j) + long_div + exit_bid;
        if (buy > tol) return {false, "buy-and-hold " + tail, buy};
        const double sell = d.bid(n, j) - short_div - exit_ask;
        if (sell > tol) return {false, "sell-and-hold " + tail, sell};
      }
    }
  }

  // Full cone: max E_q[Gx] over the normalized cone.
  if (m.num_securities() > 0) {
    const ConeLP cone = build_cone(m, 0);
    LinearProgram lp(Sense::Maximize);
    add_cone(lp, cone);
    Terms box;
    for (std::size_t k = 0; k < cone.num_vars(); ++k) {
      double c = 0.0;
      for (std::size_t l = 0; l < cone.num_leaves(); ++l) c += q[l] * cone.g(l, k);
      lp.set_cost(k, c);
      box.emplace_back(k, 1.0);
    }
    lp.add_row(RowType::LessEqual, box, 1.0);
    const LPSolution s = solve_lp(lp);
    require_optimal(s, "risk-neutral verification");
    if (s.objective > tol) {
      return {false, "cone strategy with positive expected payoff", s.objective};
    }
  }

  const SnellEnvelopes env = snell_envelopes(m, q);
  for (NodeId n = 0; n < tree.size(); ++n) {
    for (std::size_t j = 0; j < m.num_securities(); ++j) {
      const std::string at = " for security " + std::to_string(j + 1) + " at node " + tree.name(n);
      if (env.Xb(n, j) > env.Xa(n, j) + tol) {
        return {false, "Xb exceeds Xa" + at, env.Xb(n, j) - env.Xa(n, j)};
      }
      if (tree.is_leaf(n)) continue;
      const double eb = expect_children(tree, mq, n, [&](NodeId c) { return env.Xb(c, j); });
      const double ea = expect_children(tree, mq, n, [&](NodeId c) { return env.Xa(c, j); });
      if (eb > env.Xb(n, j) + tol) return {false, "Xb not a supermartingale" + at, eb - env.Xb(n, j)};
      if (ea < env.Xa(n, j) - tol) return {false, "Xa not a submartingale" + at, env.Xa(n, j) - ea};
    }
  }
  return out;
}

EfficientFrictionCheck efficient_friction_on_cone(const ConeLP& cone, double tol) {
  EfficientFrictionCheck out;
  LinearProgram base(Sense::Maximize);
  add_cone(base, cone);
  Terms box;
  for (std::size_t k = 0; k < cone.num_vars(); ++k) box.emplace_back(k, 1.0);
  for (std::size_t l = 0; l < cone.num_leaves(); ++l) {
    base.add_row(RowType::Equal, payoff_row(cone, l, 0), 0.0);
  }
  base.add_row(RowType::LessEqual, box, 1.0);

  auto attempt = [&](const Terms& objective, const std::string& where) {
    LinearProgram lp = base;
    for (const auto& [k, a] : objective) lp.set_cost(k, a);
    const LPSolution s = solve_lp(lp);
    require_optimal(s, "efficient-friction search");
    if (s.objective <= tol) return false;
    NodeVector psi = cone.net_position(s.x);
    double scale = 0.0;
    for (double v : psi.raw()) scale = std::max(scale, std::abs(v));
    for (std::size_t k = cone.num_base_vars(); k < cone.num_vars(); ++k) {
      scale = std::max(scale, s.x[k]);
    }
    if (scale > 0.0) {
      for (double& v : psi.raw()) v /= scale;
    }
    out.ef = false;
    out.violation = std::move(psi);
    out.where = where;
    return true;
  };

  for (NodeId n : cone.decision_nodes()) {
    for (std::size_t j = 0; j < cone.num_securities(); ++j) {
      const std::size_t lam = cone.index(ConeVar::LongPos, n, j);
      const std::size_t sig = cone.index(ConeVar::ShortPos, n, j);
      const std::string tag = cone.describe(lam).substr(3);
      if (attempt({{lam, 1.0}, {sig, -1.0}}, "long" + tag)) return out;
      if (attempt({{lam, -1.0}, {sig, 1.0}}, "short" + tag)) return out;
    }
  }
  for (std::size_t k = cone.num_base_vars(); k < cone.num_vars(); ++k) {
    if (attempt({{k, 1.0}}, cone.describe(k))) return out;
  }
  return out;
}

EfficientFrictionCheck check_efficient_friction(const MarketModel& m, double tol) {
  if (check_no_arbitrage(m, 0, tol)) {
    throw PreconditionError("efficient friction is only checked on arbitrage-free markets");
  }
  if (m.num_securities() == 0) return {};
  return efficient_friction_on_cone(build_cone(m, 0), tol);
}

nlohmann::json certificate_to_json(const MarketModel& m, const ArbitrageCertificate& c) {
  nlohmann::json doc = strategy_to_json(m, c.strategy);
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t i = 0; i < c.leaves.size(); ++i) values[m.tree().name(c.leaves[i])] = c.leaf_values[i];
  doc["leafValues"] = std::move(values);
  doc["margin"] = c.margin;
  return doc;
}

nlohmann::json measure_to_json(const MarketModel& m, const RiskNeutralMeasure& q) {
  nlohmann::json probs = nlohmann::json::object();
  for (std::size_t i = 0; i < q.leaves.size(); ++i) probs[m.tree().name(q.leaves[i])] = q.q[i];
  return {{"q", probs}, {"epsilon", q.epsilon}};
}

std::vector<double> leaf_probabilities_from_json(const ScenarioTree& tree, const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("q") || !doc["q"].is_object()) {
    throw ValidationError(ValidationError::Kind::Malformed, "", "measure document needs \"q\"");
  }
  std::vector<double> q;
  for (NodeId l : tree.leaves()) {
    const auto& e = doc["q"];
    if (!e.contains(tree.name(l)) || !e[tree.name(l)].is_number()) {
      throw ValidationError(ValidationError::Kind::MissingQuote, tree.name(l),
                            "measure has no probability for leaf " + tree.name(l));
    }
    q.push_back(e[tree.name(l)].get<double>());
  }
  return q;
}

}  // namespace fmkt
