#pragma once

#include <string>
#include <vector>

#include "fmkt/lp.hpp"
#include "fmkt/market.hpp"

namespace fmkt {

enum class ConeVar : std::size_t {
  LongBuy = 0,
  LongSell,
  ShortOpen,
  ShortClose,
  LongPos,
  ShortPos,
};
inline constexpr std::size_t kVarsPerPosition = 6;

// {G x : x >= 0, E x = 0}: discounted terminal payoffs attainable at zero cost
// by trading from the cone's root nodes on. Long and short accounts are
// separate nonnegative states with their own flows; cash is accumulated into
// the leaf rows of G.
class ConeLP {
 public:
  int start() const noexcept { return start_; }
  const std::vector<NodeId>& roots() const noexcept { return roots_; }
  const std::vector<NodeId>& decision_nodes() const noexcept { return decision_; }
  // Rows of G, in tree leaves() order.
  const std::vector<NodeId>& leaves() const noexcept { return leaves_; }
  std::size_t num_securities() const noexcept { return n_sec_; }
  std::size_t tree_size() const noexcept { return tree_size_; }

  std::size_t num_vars() const noexcept { return num_vars_; }
  std::size_t num_base_vars() const noexcept { return decision_.size() * n_sec_ * kVarsPerPosition; }
  std::size_t num_leaves() const noexcept { return leaves_.size(); }

  // Column of variable `v` for decision node n (must belong to the cone).
  std::size_t index(ConeVar v, NodeId n, std::size_t j) const;
  bool contains(NodeId n) const { return n < pos_.size() && pos_[n] != npos; }

  double g(std::size_t row, std::size_t col) const { return g_[col * leaves_.size() + row]; }
  const std::vector<Terms>& balance_rows() const noexcept { return e_rows_; }

  // Appends a nonnegative variable with the given payoff per leaf row.
  std::size_t add_payoff_column(const std::vector<double>& column);

  std::vector<double> payoff(const std::vector<double>& x) const;
  double balance_residual(const std::vector<double>& x) const;
  // lambda - sigma on the cone's decision nodes, zero elsewhere.
  NodeVector net_position(const std::vector<double>& x) const;

  std::string describe(std::size_t col) const;
  // MPS-like plain-text dump of G and E.
  std::string to_text() const;

 private:
  friend ConeLP build_cone_from_roots(const MarketModel&, std::vector<NodeId>);
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  int start_ = 0;
  std::size_t n_sec_ = 0;
  std::size_t tree_size_ = 0;
  std::vector<NodeId> roots_, decision_, leaves_;
  std::vector<std::size_t> pos_;
  std::vector<std::string> node_names_;
  std::size_t num_vars_ = 0;
  std::vector<double> g_;  // leaves x vars, column-major
  std::vector<Terms> e_rows_;
};

// Cone of strategies that are flat up to time t and trade from t on, covering
// every time-t subtree.
ConeLP build_cone(const MarketModel& m, int t);
// Cone restricted to the subtree rooted at `root`.
ConeLP build_subtree_cone(const MarketModel& m, NodeId root);
ConeLP build_cone_from_roots(const MarketModel& m, std::vector<NodeId> roots);

// lambda = psi^+, sigma = psi^-, flows splitting each change by sign.
std::vector<double> canonical_decomposition(const NodeVector& psi, const ConeLP& c);

}  // namespace fmkt
