#include "fmkt/portfolio.hpp"

#include <cmath>
#include <stdexcept>

#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

void check_shape(const MarketModel& m, const TradingStrategy& phi) {
  const auto& tree = m.tree();
  if (phi.cash.nodes() != tree.size() || phi.cash.width() != 1 ||
      phi.risky.nodes() != tree.size() || phi.risky.width() != m.num_securities()) {
    throw ValidationError(ValidationError::Kind::ShapeMismatch, "",
                          "strategy shape does not match market");
  }
}

void check_shape(const MarketModel& m, const NodeVector& psi) {
  if (psi.nodes() != m.tree().size() || psi.width() != m.num_securities()) {
    throw ValidationError(ValidationError::Kind::ShapeMismatch, "",
                          "risky holdings shape does not match market");
  }
}

// Cash generated at node n (time >= 1) by the holdings carried in from its
// parent and the rebalancing to the holdings stored at n, undiscounted.
double net_cash_flow(const MarketModel& m, const NodeVector& risky, NodeId n) {
  const auto& q = m.quotes();
  const NodeId p = *m.tree().node(n).parent;
  double flow = 0.0;
  for (std::size_t j = 0; j < m.num_securities(); ++j) {
    flow += dividend_value(risky(p, j), q.div_ask(n, j), q.div_bid(n, j));
    flow -= trade_cost(risky(n, j) - risky(p, j), q.ask(n, j), q.bid(n, j));
  }
  return flow;
}

double initial_cost(const MarketModel& m, const NodeVector& risky) {
  const NodeId r = m.tree().root();
  double c = 0.0;
  for (std::size_t j = 0; j < m.num_securities(); ++j) {
    c += trade_cost(risky(r, j), m.ask(r, j), m.bid(r, j));
  }
  return c;
}

}  // namespace

TradingStrategy zero_strategy(const MarketModel& m) {
  return {NodeVector(m.tree().size(), 1), NodeVector(m.tree().size(), m.num_securities())};
}

NodeVector value_process(const MarketModel& m, const TradingStrategy& phi) {
  check_shape(m, phi);
  const auto& tree = m.tree();
  const auto& q = m.quotes();
  NodeVector v(tree.size(), 1);
  const NodeId r = tree.root();
  v(r, 0) = phi.cash(r, 0) * m.savings(0) + initial_cost(m, phi.risky);
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (n == r) continue;
    const NodeId p = *tree.node(n).parent;
    double val = phi.cash(p, 0) * m.savings_at(n);
    for (std::size_t j = 0; j < m.num_securities(); ++j) {
      const double h = phi.risky(p, j);
      val += liquidation_value(h, q.ask(n, j), q.bid(n, j));
      val += dividend_value(h, q.div_ask(n, j), q.div_bid(n, j));
    }
    v(n, 0) = val;
  }
  return v;
}

NodeVector discounted_value_process(const MarketModel& m, const TradingStrategy& phi) {
  NodeVector v = value_process(m, phi);
  for (NodeId n = 0; n < v.nodes(); ++n) v(n, 0) /= m.savings_at(n);
  return v;
}

SelfFinancingCheck is_self_financing(const MarketModel& m, const TradingStrategy& phi, double tol) {
  check_shape(m, phi);
  const auto& tree = m.tree();
  SelfFinancingCheck out;
  for (NodeId n = 0; n < tree.size(); ++n) {
    const int t = tree.time(n);
    if (t < 1 || t >= tree.horizon()) continue;
    const NodeId p = *tree.node(n).parent;
    const double res =
        m.savings(t) * (phi.cash(n, 0) - phi.cash(p, 0)) - net_cash_flow(m, phi.risky, n);
    if (!(std::abs(res) <= tol)) {
      out.ok = false;
      out.node = n;
      out.residual = res;
      return out;
    }
  }
  return out;
}

TradingStrategy complete_cash_leg(const MarketModel& m, const NodeVector& psi, double v0) {
  check_shape(m, psi);
  const auto& tree = m.tree();
  TradingStrategy phi{NodeVector(tree.size(), 1), psi};
  const NodeId r = tree.root();
  phi.cash(r, 0) = (v0 - initial_cost(m, psi)) / m.savings(0);
  // Preorder guarantees parents are filled first.
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (n == r || tree.is_leaf(n)) continue;
    const NodeId p = *tree.node(n).parent;
    phi.cash(n, 0) = phi.cash(p, 0) + net_cash_flow(m, psi, n) / m.savings_at(n);
  }
  for (NodeId l : tree.leaves()) {
    for (std::size_t j = 0; j < m.num_securities(); ++j) phi.risky(l, j) = 0.0;
  }
  return phi;
}

TradingStrategy combine(const MarketModel& m, const TradingStrategy& phi,
                        const TradingStrategy& psi, double tol) {
  for (const TradingStrategy* s : {&phi, &psi}) {
    if (auto sf = is_self_financing(m, *s, tol); !sf) {
      throw PreconditionError("strategy is not self-financing at node " +
                              m.tree().name(*sf.node));
    }
    const double v0 = value_process(m, *s)(m.tree().root(), 0);
    if (std::abs(v0) > tol) throw PreconditionError("strategy has nonzero initial value");
  }
  const auto& tree = m.tree();
  TradingStrategy theta{NodeVector(tree.size(), 1), NodeVector(tree.size(), m.num_securities())};
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tree.is_leaf(n)) continue;
    for (std::size_t j = 0; j < m.num_securities(); ++j) {
      theta.risky(n, j) = phi.risky(n, j) + psi.risky(n, j);
    }
  }
  const NodeId r = tree.root();
  theta.cash(r, 0) = phi.cash(r, 0) + psi.cash(r, 0);
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (n == r || tree.is_leaf(n)) continue;
    const NodeId p = *tree.node(n).parent;
    theta.cash(n, 0) = theta.cash(p, 0) + net_cash_flow(m, theta.risky, n) / m.savings_at(n);
  }
  return theta;
}

std::vector<double> payoff_F(const MarketModel& m, const NodeVector& psi, int start) {
  check_shape(m, psi);
  const auto& tree = m.tree();
  const auto& d = m.discounted();
  const std::size_t N = m.num_securities();
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tree.time(n) >= start) continue;
    for (std::size_t j = 0; j < N; ++j) {
      if (psi(n, j) != 0.0) {
        throw PreconditionError("holdings must vanish before time " + std::to_string(start) +
                                " but are nonzero at node " + tree.name(n));
      }
    }
  }
  std::vector<double> acc(tree.size(), 0.0);
  const NodeId r = tree.root();
  for (std::size_t j = 0; j < N; ++j) acc[r] -= trade_cost(psi(r, j), d.ask(r, j), d.bid(r, j));
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (n == r) continue;
    const NodeId p = *tree.node(n).parent;
    double a = acc[p];
    for (std::size_t j = 0; j < N; ++j) {
      const double h = psi(p, j);
      a += dividend_value(h, d.div_ask(n, j), d.div_bid(n, j));
      if (tree.is_leaf(n)) {
        a += liquidation_value(h, d.ask(n, j), d.bid(n, j));
      } else {
        a -= trade_cost(psi(n, j) - h, d.ask(n, j), d.bid(n, j));
      }
    }
    acc[n] = a;
  }
  std::vector<double> out;
  out.reserve(tree.leaves().size());
  for (NodeId l : tree.leaves()) out.push_back(acc[l]);
  return out;
}

nlohmann::json strategy_to_json(const MarketModel& m, const TradingStrategy& phi) {
  check_shape(m, phi);
  const auto& tree = m.tree();
  nlohmann::json s = nlohmann::json::object();
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tree.is_leaf(n)) continue;
    std::vector<double> risky(phi.risky.at(n).begin(), phi.risky.at(n).end());
    s[tree.name(n)] = {{"cash", phi.cash(n, 0)}, {"risky", risky}};
  }
  return {{"strategy", s}};
}

TradingStrategy strategy_from_json(const MarketModel& m, const nlohmann::json& doc) {
  const auto& tree = m.tree();
  TradingStrategy phi = zero_strategy(m);
  try {
    const auto& s = doc.at("strategy");
    for (const auto& [id, e] : s.items()) {
      const NodeId n = tree.index_of(id);
      if (tree.is_leaf(n)) {
        throw ValidationError(ValidationError::Kind::Malformed, id,
                              "holdings given at terminal node " + id);
      }
      phi.cash(n, 0) = e.value("cash", 0.0);
      const auto risky = e.value("risky", std::vector<double>{});
      if (risky.size() != m.num_securities()) {
        throw ValidationError(ValidationError::Kind::ShapeMismatch, id,
                              "risky holdings at node " + id + " have wrong length");
      }
      for (std::size_t j = 0; j < risky.size(); ++j) phi.risky(n, j) = risky[j];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(ValidationError::Kind::Malformed, "",
                          std::string("malformed strategy document: ") + e.what());
  }
  return phi;
}

}  // namespace fmkt
