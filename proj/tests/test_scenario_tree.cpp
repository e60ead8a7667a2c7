#include <gtest/gtest.h>

#include "fmkt/errors.hpp"
#include "fmkt/scenario_tree.hpp"
#include "support/random_markets.hpp"

using namespace fmkt;
using namespace fmkt::testing;

namespace {

ValidationError::Kind build_error(nlohmann::json doc) {
  try {
    ScenarioTree::from_json(doc);
  } catch (const ValidationError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a validation error";
  return ValidationError::Kind::Malformed;
}

}  // namespace

TEST(ScenarioTree, Tree1Shape) {
  auto t = ScenarioTree::from_json(read_fixture("tree1.json"));
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.leaves().size(), 2u);
  EXPECT_EQ(t.horizon(), 1);
  EXPECT_EQ(t.name(t.root()), "n0");
  EXPECT_EQ(t.name(t.leaves()[0]), "n_u");
  EXPECT_DOUBLE_EQ(t.path_probability(t.index_of("n_d")), 0.5);
}

TEST(ScenarioTree, SinglePath) {
  std::vector<NodeSpec> s{{"a", 0, std::nullopt, 1.0}, {"b", 1, "a", 1.0}, {"c", 2, "b", 1.0}};
  auto t = ScenarioTree::build(2, s);
  EXPECT_EQ(t.leaves().size(), 1u);
  EXPECT_DOUBLE_EQ(t.path_probability(t.index_of("c")), 1.0);
  EXPECT_EQ(t.ancestor_at(t.index_of("c"), 0), t.root());
}

TEST(ScenarioTree, ProbabilitySumError) {
  auto doc = read_fixture("tree1.json");
  doc["nodes"][1]["prob"] = 0.6;
  try {
    ScenarioTree::from_json(doc);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.kind(), ValidationError::Kind::ProbabilitySum);
    EXPECT_EQ(e.node(), "n0");
    EXPECT_NE(std::string(e.what()).find("children probabilities sum"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("at node n0"), std::string::npos);
  }
}

TEST(ScenarioTree, DistinctErrors) {
  auto doc = read_fixture("tree1.json");
  auto orphan = doc;
  orphan["nodes"][2]["parent"] = "nowhere";
  EXPECT_EQ(build_error(orphan), ValidationError::Kind::OrphanNode);

  auto gap = doc;
  gap["horizon"] = 2;
  gap["nodes"][2]["time"] = 2;
  EXPECT_EQ(build_error(gap), ValidationError::Kind::TimeGap);

  auto neg = doc;
  neg["nodes"][1]["prob"] = 0.0;
  neg["nodes"][2]["prob"] = 1.0;
  EXPECT_EQ(build_error(neg), ValidationError::Kind::NonPositiveProbability);

  auto dup = doc;
  dup["nodes"][2]["id"] = "n_u";
  EXPECT_EQ(build_error(dup), ValidationError::Kind::DuplicateNode);

  auto noroot = doc;
  noroot["nodes"].erase(0);
  EXPECT_NE(build_error(noroot), ValidationError::Kind::Malformed);
}

TEST(ScenarioTree, DepthFirstOrder) {
  std::vector<NodeSpec> s{{"r", 0, std::nullopt, 1.0}, {"a", 1, "r", 0.5}, {"b", 1, "r", 0.5},
                          {"b1", 2, "b", 1.0},         {"a1", 2, "a", 0.3}, {"a2", 2, "a", 0.7}};
  auto t = ScenarioTree::build(2, s);
  std::vector<std::string> order;
  for (NodeId n = 0; n < t.size(); ++n) order.push_back(t.name(n));
  EXPECT_EQ(order, (std::vector<std::string>{"r", "a", "a1", "a2", "b", "b1"}));
  EXPECT_EQ(t.leaves_under(t.index_of("a")).size(), 2u);
}

TEST(ScenarioTree, JsonRoundTrip) {
  auto t = ScenarioTree::from_json(read_fixture("cds1_spec.json")["tree"]);
  nlohmann::json doc;
  t.to_json(doc);
  auto u = ScenarioTree::from_json(doc);
  ASSERT_EQ(u.size(), t.size());
  for (NodeId n = 0; n < t.size(); ++n) {
    EXPECT_EQ(u.name(n), t.name(n));
    EXPECT_DOUBLE_EQ(u.node(n).prob, t.node(n).prob);
  }
}

TEST(ConditionalExpectation, Cds1DividendBid) {
  auto spec = read_fixture("cds1_spec.json");
  auto t = ScenarioTree::from_json(spec["tree"]);
  NodeVector x(t.size(), 1);
  x(t.index_of("n_sd")) = 0.6;
  x(t.index_of("n_ss")) = -0.04;
  x(t.index_of("n_dd")) = 0.0;
  const Measure q = Measure::physical(t);
  EXPECT_NEAR(conditional_expectation(t, q, x, 2, t.index_of("n_s")), 0.024, 1e-15);
}

TEST(ConditionalExpectation, Normalization) {
  Rng rng(7);
  auto t = random_tree(rng, 3, 1, 3);
  NodeVector one(t.size(), 1, 1.0);
  const Measure q = Measure::physical(t);
  for (NodeId n = 0; n < t.size(); ++n) {
    EXPECT_NEAR(conditional_expectation(t, q, one, 3, n), 1.0, 1e-14);
  }
}

TEST(ConditionalExpectation, TowerProperty) {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto t = random_tree(rng, 3, 1, 3);
    NodeVector x(t.size(), 1);
    for (NodeId n : t.leaves()) x(n) = uniform(rng, -5, 5);
    const Measure q = Measure::physical(t);
    NodeVector inner(t.size(), 1);
    for (NodeId n : t.nodes_at(2)) inner(n) = conditional_expectation(t, q, x, 3, n);
    for (NodeId n : t.nodes_at(1)) {
      EXPECT_NEAR(conditional_expectation(t, q, inner, 2, n), conditional_expectation(t, q, x, 3, n), 1e-12);
    }
  }
}

TEST(ConditionalExpectation, DeeperNodeRejected) {
  auto t = ScenarioTree::from_json(read_fixture("tree1.json"));
  NodeVector x(t.size(), 1);
  EXPECT_THROW(conditional_expectation(t, Measure::physical(t), x, 0, t.index_of("n_u")), std::invalid_argument);
}

TEST(Measure, LeafProbabilitiesSumToOne) {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto t = random_tree(rng, 3, 1, 3);
    auto p = Measure::physical(t).leaf_probabilities(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += p[i];
      EXPECT_NEAR(p[i], t.path_probability(t.leaves()[i]), 1e-15);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    auto back = Measure::from_leaf_probabilities(t, p).leaf_probabilities(t);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(back[i], p[i], 1e-14);
  }
}
