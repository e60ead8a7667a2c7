#include "fmkt/cps.hpp"

#include <algorithm>
#include <cmath>

#include "fmkt/arbitrage.hpp"
#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

// Envelopes with the dividend increments `ab` inside the bid-side recursion
// and `aa` inside the ask-side one.
SnellEnvelopes envelopes(const MarketModel& m, const Measure& q, const NodeVector& ab,
                         const NodeVector& aa) {
  const auto& tree = m.tree();
  const auto& d = m.discounted();
  const std::size_t N = m.num_securities();
  SnellEnvelopes e{NodeVector(tree.size(), N), NodeVector(tree.size(), N),
                   NodeVector(tree.size(), N), NodeVector(tree.size(), N)};
  for (NodeId n = tree.size(); n-- > 0;) {
    for (std::size_t j = 0; j < N; ++j) {
      if (tree.is_leaf(n)) {
        e.Yb(n, j) = d.bid(n, j);
        e.Ya(n, j) = d.ask(n, j);
        continue;
      }
      const double cb = expect_children(tree, q, n, [&](NodeId c) { return ab(c, j) + e.Yb(c, j); });
      const double ca = expect_children(tree, q, n, [&](NodeId c) { return aa(c, j) + e.Ya(c, j); });
      e.Yb(n, j) = std::max(d.bid(n, j), cb);
      e.Ya(n, j) = std::min(d.ask(n, j), ca);
    }
  }
  NodeVector cb(tree.size(), N), ca(tree.size(), N);
  for (NodeId n = 0; n < tree.size(); ++n) {
    for (std::size_t j = 0; j < N; ++j) {
      if (n != tree.root()) {
        const NodeId p = *tree.node(n).parent;
        cb(n, j) = cb(p, j) + ab(n, j);
        ca(n, j) = ca(p, j) + aa(n, j);
      }
      e.Xb(n, j) = e.Yb(n, j) + cb(n, j);
      e.Xa(n, j) = e.Ya(n, j) + ca(n, j);
    }
  }
  return e;
}

}  // namespace

SnellEnvelopes snell_envelopes(const MarketModel& m, const std::vector<double>& q) {
  const Measure mq = Measure::from_leaf_probabilities(m.tree(), q);
  return envelopes(m, mq, m.discounted().div_ask, m.discounted().div_bid);
}

bool CpsReport::ok() const {
  return std::all_of(items.begin(), items.end(), [](const CpsCheck& c) { return c.ok; });
}

CpsReport verify_cps(const MarketModel& m, const ConsistentPricingSystem& c, double tol) {
  const auto& tree = m.tree();
  const auto& d = m.discounted();
  const std::size_t N = m.num_securities();
  CpsReport rep;
  auto fail = [](CpsCheck& item, const std::string& node, double res) {
    if (!item.ok) return;
    item.ok = false;
    item.node = node;
    item.residual = res;
  };

  auto item = [](const char* name) {
    CpsCheck c;
    c.name = name;
    return c;
  };
  CpsCheck measure = item("measure");
  const auto leaves = tree.leaves();
  if (c.q.size() != leaves.size()) {
    fail(measure, "", 0.0);
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.q.size(); ++i) {
      if (!(c.q[i] > 0.0)) fail(measure, tree.name(leaves[i]), c.q[i]);
      sum += c.q[i];
    }
    if (std::abs(sum - 1.0) > tol) fail(measure, tree.name(tree.root()), sum - 1.0);
  }
  rep.items.push_back(measure);

  const bool shapes = c.P.nodes() == tree.size() && c.P.width() == N && c.A.nodes() == tree.size() &&
                      c.A.width() == N && c.M.nodes() == tree.size() && c.M.width() == N;
  CpsCheck pb = item("price bracket"), ab = item("dividend bracket"), mart = item("martingale"),
           cons = item("consistency");
  if (!shapes) {
    for (CpsCheck* it : {&pb, &ab, &mart, &cons}) fail(*it, "", 0.0);
    rep.items.insert(rep.items.end(), {pb, ab, mart, cons});
    return rep;
  }

  for (NodeId n = 0; n < tree.size(); ++n) {
    for (std::size_t j = 0; j < N; ++j) {
      const double p = c.P(n, j);
      if (p < d.bid(n, j) - tol) fail(pb, tree.name(n), p - d.bid(n, j));
      if (p > d.ask(n, j) + tol) fail(pb, tree.name(n), p - d.ask(n, j));
      const double a = c.A(n, j);
      if (n == tree.root()) {
        if (std::abs(a) > tol) fail(ab, tree.name(n), a);
      } else {
        if (a < d.div_ask(n, j) - tol) fail(ab, tree.name(n), a - d.div_ask(n, j));
        if (a > d.div_bid(n, j) + tol) fail(ab, tree.name(n), a - d.div_bid(n, j));
      }
    }
  }

  if (measure.ok) {
    const Measure mq = Measure::from_leaf_probabilities(tree, c.q);
    for (NodeId n = 0; n < tree.size(); ++n) {
      if (tree.is_leaf(n)) continue;
      for (std::size_t j = 0; j < N; ++j) {
        const double e = expect_children(tree, mq, n, [&](NodeId k) { return c.M(k, j); });
        if (std::abs(e - c.M(n, j)) > tol) fail(mart, tree.name(n), e - c.M(n, j));
      }
    }
  } else {
    fail(mart, "", 0.0);
  }

  NodeVector cum(tree.size(), N);
  for (NodeId n = 0; n < tree.size(); ++n) {
    for (std::size_t j = 0; j < N; ++j) {
      if (n != tree.root()) cum(n, j) = cum(*tree.node(n).parent, j) + c.A(n, j);
      const double r = c.M(n, j) - c.P(n, j) - cum(n, j);
      if (std::abs(r) > tol) fail(cons, tree.name(n), r);
    }
  }
  rep.items.insert(rep.items.end(), {pb, ab, mart, cons});
  return rep;
}

bool has_zero_dividend_spread(const MarketModel& m, double tol) {
  const auto& d = m.discounted();
  for (std::size_t k = 0; k < d.div_ask.raw().size(); ++k) {
    if (std::abs(d.div_bid.raw()[k] - d.div_ask.raw()[k]) > tol) return false;
  }
  return true;
}

CpsConstruction build_cps_from_rn(const MarketModel& m, const std::vector<double>& q) {
  if (!has_zero_dividend_spread(m)) {
    throw PreconditionError("construction unavailable: dividend bid and ask increments differ");
  }
  if (auto rn = verify_risk_neutral(m, q); !rn) {
    throw PreconditionError("measure is not risk-neutral: " + rn.violation);
  }
  const auto& tree = m.tree();
  const std::size_t N = m.num_securities();
  const Measure mq = Measure::from_leaf_probabilities(tree, q);
  const NodeVector& A = m.discounted().div_ask;
  const SnellEnvelopes e = envelopes(m, mq, A, A);

  CpsConstruction out;
  out.cps.q = q;
  out.cps.P = NodeVector(tree.size(), N);
  out.cps.A = A;
  out.cps.M = NodeVector(tree.size(), N);
  out.lambda = NodeVector(tree.size(), N);
  const NodeId r = tree.root();
  NodeVector cum(tree.size(), N);
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (n == r) continue;
    for (std::size_t j = 0; j < N; ++j) cum(n, j) = cum(*tree.node(n).parent, j) + A(n, j);
  }
  for (std::size_t j = 0; j < N; ++j) {
    out.cps.A(r, j) = 0.0;
    out.cps.P(r, j) = e.Ya(r, j);
    out.cps.M(r, j) = e.Ya(r, j);
  }
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tree.is_leaf(n)) continue;
    for (std::size_t j = 0; j < N; ++j) {
      const double eb = expect_children(tree, mq, n, [&](NodeId c) { return e.Xb(c, j); });
      const double ea = expect_children(tree, mq, n, [&](NodeId c) { return e.Xa(c, j); });
      const double den = ea - eb;
      // The range [0, 1] holds exactly in theory; clamping removes round-off
      // from a measure that came out of an LP.
      const double lam = den > 1e-12 ? std::clamp((out.cps.M(n, j) - eb) / den, 0.0, 1.0) : 0.5;
      out.lambda(n, j) = lam;
      for (NodeId c : tree.node(n).children) {
        out.cps.P(c, j) = lam * e.Ya(c, j) + (1.0 - lam) * e.Yb(c, j);
        out.cps.M(c, j) = out.cps.P(c, j) + cum(c, j);
      }
    }
  }
  return out;
}

nlohmann::json cps_to_json(const MarketModel& m, const ConsistentPricingSystem& c) {
  const auto& tree = m.tree();
  nlohmann::json q = nlohmann::json::object();
  for (std::size_t i = 0; i < c.q.size(); ++i) q[tree.name(tree.leaves()[i])] = c.q[i];
  auto proc = [&](const NodeVector& v) {
    nlohmann::json o = nlohmann::json::object();
    for (NodeId n = 0; n < tree.size(); ++n) {
      o[tree.name(n)] = std::vector<double>(v.at(n).begin(), v.at(n).end());
    }
    return o;
  };
  return {{"q", q}, {"P", proc(c.P)}, {"A", proc(c.A)}, {"M", proc(c.M)}};
}

ConsistentPricingSystem cps_from_json(const MarketModel& m, const nlohmann::json& doc) {
  const auto& tree = m.tree();
  const std::size_t N = m.num_securities();
  ConsistentPricingSystem c;
  c.q = leaf_probabilities_from_json(tree, doc);
  auto proc = [&](const char* key, bool root_optional) {
    NodeVector v(tree.size(), N);
    if (!doc.contains(key) || !doc[key].is_object()) {
      throw ValidationError(ValidationError::Kind::Malformed, "",
                            std::string("pricing-system document needs \"") + key + "\"");
    }
    const auto& o = doc[key];
    for (NodeId n = 0; n < tree.size(); ++n) {
      const std::string& id = tree.name(n);
      if (!o.contains(id)) {
        if (root_optional && n == tree.root()) continue;
        throw ValidationError(ValidationError::Kind::MissingQuote, id,
                              std::string("missing ") + key + " at node " + id);
      }
      std::vector<double> row;
      try {
        row = o[id].get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        throw ValidationError(ValidationError::Kind::Malformed, id,
                              std::string(key) + " at node " + id + " is not a number array");
      }
      if (row.size() != N) {
        throw ValidationError(ValidationError::Kind::ShapeMismatch, id,
                              std::string(key) + " at node " + id + " has wrong length");
      }
      for (std::size_t j = 0; j < N; ++j) v(n, j) = row[j];
    }
    return v;
  };
  c.P = proc("P", false);
  c.A = proc("A", true);
  c.M = proc("M", false);
  return c;
}

}  // namespace fmkt
