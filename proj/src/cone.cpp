#include "fmkt/cone.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

const char* var_tag(std::size_t k) {
  static const char* tags[] = {"bl", "sl", "ss", "bs", "lam", "sig"};
  return tags[k];
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

ConeLP build_cone_from_roots(const MarketModel& m, std::vector<NodeId> roots) {
  const auto& tree = m.tree();
  if (roots.empty()) throw std::invalid_argument("cone needs at least one root");
  const int t = tree.time(roots.front());
  for (NodeId r : roots) {
    if (tree.time(r) != t) throw std::invalid_argument("cone roots must share one time");
  }
  if (t < 0 || t >= tree.horizon()) {
    throw std::invalid_argument("cone start time " + std::to_string(t) + " outside 0.." +
                                std::to_string(tree.horizon() - 1));
  }

  ConeLP c;
  c.start_ = t;
  c.n_sec_ = m.num_securities();
  c.tree_size_ = tree.size();
  c.roots_ = std::move(roots);
  c.pos_.assign(tree.size(), ConeLP::npos);
  for (NodeId n = 0; n < tree.size(); ++n) c.node_names_.push_back(tree.name(n));

  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tree.is_leaf(n) || tree.time(n) < t) continue;
    const NodeId a = tree.ancestor_at(n, t);
    bool inside = false;
    for (NodeId r : c.roots_) inside = inside || r == a;
    if (!inside) continue;
    c.pos_[n] = c.decision_.size();
    c.decision_.push_back(n);
  }
  for (NodeId l : tree.leaves()) {
    if (c.contains(tree.ancestor_at(l, t))) c.leaves_.push_back(l);
  }

  const std::size_t N = c.n_sec_;
  const std::size_t L = c.leaves_.size();
  c.num_vars_ = c.decision_.size() * N * kVarsPerPosition;
  c.g_.assign(c.num_vars_ * L, 0.0);
  const auto& d = m.discounted();
  auto put = [&](std::size_t row, std::size_t col, double v) { c.g_[col * L + row] += v; };

  for (std::size_t row = 0; row < L; ++row) {
    const NodeId leaf = c.leaves_[row];
    NodeId child = leaf;
    while (tree.time(child) > t) {
      const NodeId a = *tree.node(child).parent;
      for (std::size_t j = 0; j < N; ++j) {
        put(row, c.index(ConeVar::LongBuy, a, j), -d.ask(a, j));
        put(row, c.index(ConeVar::LongSell, a, j), d.bid(a, j));
        put(row, c.index(ConeVar::ShortOpen, a, j), d.bid(a, j));
        put(row, c.index(ConeVar::ShortClose, a, j), -d.ask(a, j));
        double lam = d.div_ask(child, j);
        double sig = -d.div_bid(child, j);
        if (child == leaf) {
          lam += d.bid(child, j);
          sig -= d.ask(child, j);
        }
        put(row, c.index(ConeVar::LongPos, a, j), lam);
        put(row, c.index(ConeVar::ShortPos, a, j), sig);
      }
      child = a;
    }
  }

  for (NodeId n : c.decision_) {
    const bool is_root = tree.time(n) == t;
    for (std::size_t j = 0; j < N; ++j) {
      Terms lam{{c.index(ConeVar::LongPos, n, j), 1.0},
                {c.index(ConeVar::LongBuy, n, j), -1.0},
                {c.index(ConeVar::LongSell, n, j), 1.0}};
      Terms sig{{c.index(ConeVar::ShortPos, n, j), 1.0},
                {c.index(ConeVar::ShortOpen, n, j), -1.0},
                {c.index(ConeVar::ShortClose, n, j), 1.0}};
      if (!is_root) {
        const NodeId p = *tree.node(n).parent;
        lam.emplace_back(c.index(ConeVar::LongPos, p, j), -1.0);
        sig.emplace_back(c.index(ConeVar::ShortPos, p, j), -1.0);
      }
      c.e_rows_.push_back(std::move(lam));
      c.e_rows_.push_back(std::move(sig));
    }
  }
  return c;
}

ConeLP build_cone(const MarketModel& m, int t) {
  const auto& tree = m.tree();
  if (t < 0 || t >= tree.horizon()) {
    throw std::invalid_argument("cone start time " + std::to_string(t) + " outside 0.." +
                                std::to_string(tree.horizon() - 1));
  }
  const auto roots = tree.nodes_at(t);
  return build_cone_from_roots(m, std::vector<NodeId>(roots.begin(), roots.end()));
}

ConeLP build_subtree_cone(const MarketModel& m, NodeId root) {
  return build_cone_from_roots(m, {root});
}

std::size_t ConeLP::index(ConeVar v, NodeId n, std::size_t j) const {
  if (!contains(n)) throw std::out_of_range("node " + node_names_.at(n) + " is not in the cone");
  if (j >= n_sec_) throw std::out_of_range("security index out of range");
  return (pos_[n] * n_sec_ + j) * kVarsPerPosition + static_cast<std::size_t>(v);
}

std::size_t ConeLP::add_payoff_column(const std::vector<double>& column) {
  if (column.size() != leaves_.size()) throw std::invalid_argument("payoff column has wrong length");
  g_.insert(g_.end(), column.begin(), column.end());
  return num_vars_++;
}

std::vector<double> ConeLP::payoff(const std::vector<double>& x) const {
  if (x.size() != num_vars_) throw std::invalid_argument("cone point has wrong length");
  const std::size_t L = leaves_.size();
  std::vector<double> out(L, 0.0);
  for (std::size_t col = 0; col < num_vars_; ++col) {
    if (x[col] == 0.0) continue;
    for (std::size_t row = 0; row < L; ++row) out[row] += g_[col * L + row] * x[col];
  }
  return out;
}

double ConeLP::balance_residual(const std::vector<double>& x) const {
  double worst = 0.0;
  for (const Terms& r : e_rows_) {
    double s = 0.0;
    for (const auto& [k, a] : r) s += a * x.at(k);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

NodeVector ConeLP::net_position(const std::vector<double>& x) const {
  NodeVector psi(tree_size_, n_sec_);
  for (NodeId n : decision_) {
    for (std::size_t j = 0; j < n_sec_; ++j) {
      psi(n, j) = x.at(index(ConeVar::LongPos, n, j)) - x.at(index(ConeVar::ShortPos, n, j));
    }
  }
  return psi;
}

std::string ConeLP::describe(std::size_t col) const {
  if (col >= num_base_vars()) return "extra" + std::to_string(col - num_base_vars());
  const std::size_t k = col % kVarsPerPosition;
  const std::size_t rest = col / kVarsPerPosition;
  const std::size_t j = rest % n_sec_;
  const NodeId n = decision_[rest / n_sec_];
  return std::string(var_tag(k)) + "[" + node_names_[n] + "," + std::to_string(j + 1) + "]";
}

std::string ConeLP::to_text() const {
  std::ostringstream os;
  os << "NAME cone_t" << start_ << "\n";
  os << "ROWS\n";
  for (std::size_t i = 0; i < e_rows_.size(); ++i) os << " E  bal" << i << "\n";
  for (NodeId l : leaves_) os << " G  leaf_" << node_names_[l] << "\n";
  os << "COLUMNS\n";
  const std::size_t L = leaves_.size();
  for (std::size_t col = 0; col < num_vars_; ++col) {
    const std::string name = describe(col);
    for (std::size_t i = 0; i < e_rows_.size(); ++i) {
      for (const auto& [k, a] : e_rows_[i]) {
        if (k == col) os << "    " << name << "  bal" << i << "  " << num(a) << "\n";
      }
    }
    for (std::size_t row = 0; row < L; ++row) {
      const double v = g_[col * L + row];
      if (v != 0.0) os << "    " << name << "  leaf_" << node_names_[leaves_[row]] << "  " << num(v) << "\n";
    }
  }
  os << "BOUNDS\n";
  for (std::size_t col = 0; col < num_vars_; ++col) os << " LO BND  " << describe(col) << "  0\n";
  os << "ENDATA\n";
  return os.str();
}

std::vector<double> canonical_decomposition(const NodeVector& psi, const ConeLP& c) {
  std::vector<double> x(c.num_vars(), 0.0);
  const std::size_t N = c.num_securities();
  if (psi.width() != N || psi.nodes() != c.tree_size()) {
    throw std::invalid_argument("holdings shape does not match cone");
  }
  for (NodeId n : c.decision_nodes()) {
    for (std::size_t j = 0; j < N; ++j) {
      const double h = psi(n, j);
      const double lam = std::max(h, 0.0);
      const double sig = std::max(-h, 0.0);
      x[c.index(ConeVar::LongPos, n, j)] = lam;
      x[c.index(ConeVar::ShortPos, n, j)] = sig;
    }
  }
  // Each decision node's pair of balance rows lists its parent's state columns
  // when it is not a cone root; read the previous state off those rows.
  const auto& rows = c.balance_rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Terms& row = rows[r];
    const std::size_t state = row[0].first;
    const std::size_t up = row[1].first;
    const std::size_t down = row[2].first;
    const double prev = row.size() > 3 ? x[row[3].first] : 0.0;
    const double delta = x[state] - prev;
    x[up] = std::max(delta, 0.0);
    x[down] = std::max(-delta, 0.0);
  }
  return x;
}

}  // namespace fmkt
