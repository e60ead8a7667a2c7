#include "fmkt/scenario_tree.hpp"

#include <cmath>
#include <stdexcept>

#include "fmkt/errors.hpp"

namespace fmkt {

namespace {

using Kind = ValidationError::Kind;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ScenarioTree ScenarioTree::build(int horizon, std::span<const NodeSpec> specs) {
  if (horizon < 1) {
    throw ValidationError(Kind::Malformed, "", "horizon must be at least 1");
  }

  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!by_name.emplace(specs[i].id, i).second) {
      throw ValidationError(Kind::DuplicateNode, specs[i].id, "duplicate node id " + specs[i].id);
    }
  }

  std::optional<std::size_t> root;
  std::vector<std::vector<std::size_t>> children(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const NodeSpec& s = specs[i];
    if (s.time < 0 || s.time > horizon) {
      throw ValidationError(Kind::TimeGap, s.id,
                            "time " + std::to_string(s.time) + " outside 0.." +
                                std::to_string(horizon) + " at node " + s.id);
    }
    if (!s.parent) {
      if (s.time != 0) {
        throw ValidationError(Kind::OrphanNode, s.id, "node without parent at time > 0: " + s.id);
      }
      if (root) {
        throw ValidationError(Kind::MultipleRoots, s.id, "second root node " + s.id);
      }
      root = i;
      continue;
    }
    auto it = by_name.find(*s.parent);
    if (it == by_name.end()) {
      throw ValidationError(Kind::OrphanNode, s.id,
                            "orphan node " + s.id + ": unknown parent " + *s.parent);
    }
    if (specs[it->second].time != s.time - 1) {
      throw ValidationError(Kind::TimeGap, s.id,
                            "time gap between node " + s.id + " and its parent " + *s.parent);
    }
    if (!(s.prob > 0.0) || !std::isfinite(s.prob)) {
      throw ValidationError(Kind::NonPositiveProbability, s.id,
                            "nonpositive probability " + fmt_double(s.prob) + " at node " + s.id);
    }
    children[it->second].push_back(i);
  }
  if (!root) throw ValidationError(Kind::MissingRoot, "", "tree has no root node");

  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].time < horizon && children[i].empty()) {
      throw ValidationError(Kind::TimeGap, specs[i].id,
                            "non-terminal node " + specs[i].id + " at time " +
                                std::to_string(specs[i].time) + " has no children");
    }
    if (children[i].empty()) continue;
    double sum = 0.0;
    for (std::size_t c : children[i]) sum += specs[c].prob;
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      throw ValidationError(Kind::ProbabilitySum, specs[i].id,
                            "children probabilities sum " + fmt_double(sum) +
                                " != 1 at node " + specs[i].id);
    }
  }

  ScenarioTree tree;
  tree.horizon_ = horizon;
  tree.nodes_.reserve(specs.size());
  tree.by_time_.assign(static_cast<std::size_t>(horizon) + 1, {});

  // Depth-first preorder; children keep document order.
  struct Frame {
    std::size_t spec;
    std::optional<NodeId> parent;
    double prob;
  };
  std::vector<Frame> stack{{*root, std::nullopt, 1.0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const NodeId id = tree.nodes_.size();
    Node node;
    node.name = specs[f.spec].id;
    node.time = specs[f.spec].time;
    node.parent = f.parent;
    node.prob = f.prob;
    tree.nodes_.push_back(std::move(node));
    if (f.parent) tree.nodes_[*f.parent].children.push_back(id);
    tree.index_.emplace(specs[f.spec].id, id);

    const auto& kids = children[f.spec];
    double sum = 0.0;
    for (std::size_t c : kids) sum += specs[c].prob;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      stack.push_back({*it, id, specs[*it].prob / sum});
    }
  }
  for (NodeId n = 0; n < tree.nodes_.size(); ++n) {
    tree.by_time_[static_cast<std::size_t>(tree.nodes_[n].time)].push_back(n);
  }
  tree.leaf_pos_.assign(tree.nodes_.size(), static_cast<std::size_t>(-1));
  const auto& leaves = tree.by_time_.back();
  for (std::size_t i = 0; i < leaves.size(); ++i) tree.leaf_pos_[leaves[i]] = i;
  return tree;
}

ScenarioTree ScenarioTree::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("horizon") || !doc.contains("nodes") ||
      !doc["nodes"].is_array()) {
    throw ValidationError(Kind::Malformed, "", "tree document needs \"horizon\" and \"nodes\"");
  }
  std::vector<NodeSpec> specs;
  try {
    for (const auto& n : doc["nodes"]) {
      NodeSpec s;
      s.id = n.at("id").get<std::string>();
      s.time = n.at("time").get<int>();
      if (n.contains("parent") && !n["parent"].is_null()) s.parent = n["parent"].get<std::string>();
      s.prob = n.contains("prob") ? n["prob"].get<double>() : 1.0;
      specs.push_back(std::move(s));
    }
    return build(doc["horizon"].get<int>(), specs);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(Kind::Malformed, "", std::string("malformed tree document: ") + e.what());
  }
}

void ScenarioTree::to_json(nlohmann::json& doc) const {
  doc["horizon"] = horizon_;
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : nodes_) {
    nlohmann::json e;
    e["id"] = n.name;
    e["time"] = n.time;
    e["parent"] = n.parent ? nlohmann::json(nodes_[*n.parent].name) : nlohmann::json(nullptr);
    e["prob"] = n.prob;
    nodes.push_back(std::move(e));
  }
  doc["nodes"] = std::move(nodes);
}

std::optional<NodeId> ScenarioTree::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId ScenarioTree::index_of(std::string_view name) const {
  if (auto n = find(name)) return *n;
  throw ValidationError(Kind::Malformed, std::string(name), "unknown node " + std::string(name));
}

NodeId ScenarioTree::ancestor_at(NodeId n, int t) const {
  if (t > time(n) || t < 0) throw std::invalid_argument("ancestor_at: time out of range");
  while (time(n) > t) n = *nodes_[n].parent;
  return n;
}

bool ScenarioTree::is_descendant(NodeId n, NodeId ancestor) const {
  if (time(n) < time(ancestor)) return false;
  return ancestor_at(n, time(ancestor)) == ancestor;
}

std::vector<NodeId> ScenarioTree::descendants_at(NodeId n, int s) const {
  if (s < time(n)) throw std::invalid_argument("descendants_at: node deeper than target time");
  std::vector<NodeId> level{n};
  for (int t = time(n); t < s; ++t) {
    std::vector<NodeId> next;
    for (NodeId m : level) {
      next.insert(next.end(), nodes_[m].children.begin(), nodes_[m].children.end());
    }
    level = std::move(next);
  }
  return level;
}

std::vector<NodeId> ScenarioTree::leaves_under(NodeId n) const {
  return descendants_at(n, horizon_);
}

double ScenarioTree::path_probability(NodeId n) const {
  double p = 1.0;
  while (nodes_[n].parent) {
    p *= nodes_[n].prob;
    n = *nodes_[n].parent;
  }
  return p;
}

Measure Measure::physical(const ScenarioTree& tree) {
  std::vector<double> c(tree.size());
  for (NodeId n = 0; n < tree.size(); ++n) c[n] = tree.node(n).prob;
  c[tree.root()] = 1.0;
  Measure m;
  m.conditional_ = std::move(c);
  return m;
}

Measure Measure::from_conditional(const ScenarioTree& tree, std::vector<double> conditional) {
  if (conditional.size() != tree.size()) {
    throw ValidationError(ValidationError::Kind::ShapeMismatch, "",
                          "measure size does not match tree");
  }
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (!(conditional[n] >= 0.0) || !std::isfinite(conditional[n])) {
      throw ValidationError(ValidationError::Kind::NonPositiveProbability, tree.name(n),
                            "negative probability at node " + tree.name(n));
    }
    const auto& kids = tree.node(n).children;
    if (kids.empty()) continue;
    double sum = 0.0;
    for (NodeId c : kids) sum += conditional[c];
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError(ValidationError::Kind::ProbabilitySum, tree.name(n),
                            "children probabilities sum " + fmt_double(sum) +
                                " != 1 at node " + tree.name(n));
    }
    for (NodeId c : kids) conditional[c] /= sum;
  }
  conditional[tree.root()] = 1.0;
  Measure m;
  m.conditional_ = std::move(conditional);
  return m;
}

Measure Measure::from_leaf_probabilities(const ScenarioTree& tree, std::span<const double> leaf_probs) {
  const auto leaves = tree.leaves();
  if (leaf_probs.size() != leaves.size()) {
    throw ValidationError(ValidationError::Kind::ShapeMismatch, "",
                          "leaf probability vector does not match tree");
  }
  std::vector<double> mass(tree.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (!(leaf_probs[i] >= 0.0) || !std::isfinite(leaf_probs[i])) {
      throw ValidationError(ValidationError::Kind::NonPositiveProbability, tree.name(leaves[i]),
                            "negative probability at leaf " + tree.name(leaves[i]));
    }
    mass[leaves[i]] = leaf_probs[i];
    total += leaf_probs[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError(ValidationError::Kind::ProbabilitySum, tree.name(tree.root()),
                          "leaf probabilities sum " + fmt_double(total) + " != 1");
  }
  for (int t = tree.horizon() - 1; t >= 0; --t) {
    for (NodeId n : tree.nodes_at(t)) {
      double s = 0.0;
      for (NodeId c : tree.node(n).children) s += mass[c];
      mass[n] = s;
    }
  }
  std::vector<double> c(tree.size(), 0.0);
  c[tree.root()] = 1.0;
  for (NodeId n = 0; n < tree.size(); ++n) {
    const auto& kids = tree.node(n).children;
    for (NodeId k : kids) {
      c[k] = mass[n] > 0.0 ? mass[k] / mass[n] : 1.0 / static_cast<double>(kids.size());
    }
  }
  Measure m;
  m.conditional_ = std::move(c);
  return m;
}

std::vector<double> Measure::leaf_probabilities(const ScenarioTree& tree) const {
  std::vector<double> abs(tree.size(), 0.0);
  abs[tree.root()] = 1.0;
  for (NodeId n = 0; n < tree.size(); ++n) {
    for (NodeId c : tree.node(n).children) abs[c] = abs[n] * conditional_[c];
  }
  std::vector<double> out;
  out.reserve(tree.leaves().size());
  for (NodeId l : tree.leaves()) out.push_back(abs[l]);
  return out;
}

bool Measure::strictly_positive() const {
  for (double p : conditional_) {
    if (!(p > 0.0)) return false;
  }
  return true;
}

double conditional_expectation(const ScenarioTree& tree, const Measure& q, const NodeVector& x,
                               std::size_t component, int s, NodeId n) {
  if (tree.time(n) > s) {
    throw std::invalid_argument("conditional_expectation: node " + tree.name(n) +
                                " lies deeper than time " + std::to_string(s));
  }
  if (tree.time(n) == s) return x(n, component);
  double acc = 0.0;
  for (NodeId c : tree.node(n).children) {
    acc += q.conditional(c) * conditional_expectation(tree, q, x, component, s, c);
  }
  return acc;
}

double conditional_expectation(const ScenarioTree& tree, const Measure& q, const NodeVector& x,
                               int s, NodeId n) {
  return conditional_expectation(tree, q, x, 0, s, n);
}

}  // namespace fmkt
