#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace fmkt {

using NodeId = std::size_t;

inline constexpr double kProbabilityTolerance = 1e-12;

struct Node {
  std::string name;
  int time = 0;
  std::optional<NodeId> parent;
  double prob = 1.0;  // conditional probability given the parent
  std::vector<NodeId> children;
};

// One entry of a tree-description document.
struct NodeSpec {
  std::string id;
  int time = 0;
  std::optional<std::string> parent;
  double prob = 1.0;
};

// Rooted event tree. A node at depth t is an atom of F_t; the physical
// measure is stored as conditional (parent-to-child) probabilities.
// Node indices follow depth-first preorder, children in document order.
class ScenarioTree {
 public:
  ScenarioTree() = default;

  // Validates and normalizes. Throws ValidationError naming the offending node.
  static ScenarioTree build(int horizon, std::span<const NodeSpec> nodes);

  // Reads {"horizon": T, "nodes": [...]} (extra keys are ignored).
  static ScenarioTree from_json(const nlohmann::json& doc);
  void to_json(nlohmann::json& doc) const;

  int horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  NodeId root() const noexcept { return 0; }

  const Node& node(NodeId n) const { return nodes_.at(n); }
  const std::string& name(NodeId n) const { return nodes_.at(n).name; }
  int time(NodeId n) const { return nodes_.at(n).time; }
  bool is_leaf(NodeId n) const { return nodes_.at(n).time == horizon_; }

  std::optional<NodeId> find(std::string_view name) const;
  // Like find() but throws ValidationError when the name is unknown.
  NodeId index_of(std::string_view name) const;

  std::span<const NodeId> nodes_at(int t) const { return by_time_.at(static_cast<std::size_t>(t)); }
  std::span<const NodeId> leaves() const { return nodes_at(horizon_); }
  // Position of a leaf within leaves().
  std::size_t leaf_position(NodeId leaf) const { return leaf_pos_.at(leaf); }

  // Ancestor of n at time t (n itself when t == time(n)).
  NodeId ancestor_at(NodeId n, int t) const;
  bool is_descendant(NodeId n, NodeId ancestor) const;
  // All descendants of n living at time s (n itself when s == time(n)).
  std::vector<NodeId> descendants_at(NodeId n, int s) const;
  // Leaves below n, in leaves() order.
  std::vector<NodeId> leaves_under(NodeId n) const;

  // Absolute physical probability of reaching n.
  double path_probability(NodeId n) const;

 private:
  int horizon_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::vector<NodeId>> by_time_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::size_t> leaf_pos_;
};

// Dense per-node storage of a real vector of fixed width. Used for adapted
// processes (values on every node) and for predictable processes, where the
// holding carried from t into t+1 is stored on the time-t node.
class NodeVector {
 public:
  NodeVector() = default;
  NodeVector(std::size_t nodes, std::size_t width, double init = 0.0)
      : nodes_(nodes), width_(width), data_(nodes * width, init) {}

  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t width() const noexcept { return width_; }

  double& operator()(NodeId n, std::size_t j = 0) { return data_[n * width_ + j]; }
  double operator()(NodeId n, std::size_t j = 0) const { return data_[n * width_ + j]; }

  std::span<double> at(NodeId n) { return {data_.data() + n * width_, width_}; }
  std::span<const double> at(NodeId n) const { return {data_.data() + n * width_, width_}; }

  std::span<const double> raw() const noexcept { return data_; }
  std::span<double> raw() noexcept { return data_; }

  friend bool operator==(const NodeVector&, const NodeVector&) = default;

 private:
  std::size_t nodes_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

// Probability measure on the tree stored as conditional probabilities.
// Entries may be zero (closure of the equivalent measures); positivity is
// checked where a routine requires it.
class Measure {
 public:
  Measure() = default;

  static Measure physical(const ScenarioTree& tree);
  // From conditional probabilities per node (root entry ignored).
  static Measure from_conditional(const ScenarioTree& tree, std::vector<double> conditional);
  // From absolute leaf probabilities given in leaves() order. Nodes of zero
  // mass receive uniform conditional weights so the tower property still holds.
  static Measure from_leaf_probabilities(const ScenarioTree& tree, std::span<const double> leaf_probs);

  double conditional(NodeId n) const { return conditional_.at(n); }
  std::span<const double> conditional() const noexcept { return conditional_; }
  // Absolute probability of each leaf, in leaves() order.
  std::vector<double> leaf_probabilities(const ScenarioTree& tree) const;
  bool strictly_positive() const;

 private:
  std::vector<double> conditional_;
};

// E_q[x_s | node n] where x is read at the time-s descendants of n.
// Throws std::invalid_argument when n lies deeper than s.
double conditional_expectation(const ScenarioTree& tree, const Measure& q,
                               const NodeVector& x, std::size_t component,
                               int s, NodeId n);

// Convenience for scalar processes.
double conditional_expectation(const ScenarioTree& tree, const Measure& q,
                               const NodeVector& x, int s, NodeId n);

// Expectation over the children of n of a per-node quantity.
template <typename F>
double expect_children(const ScenarioTree& tree, const Measure& q, NodeId n, F&& value) {
  double acc = 0.0;
  for (NodeId c : tree.node(n).children) acc += q.conditional(c) * value(c);
  return acc;
}

}  // namespace fmkt
