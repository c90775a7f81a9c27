#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "guarnet/eval.hpp"
#include "guarnet/gbdt.hpp"
#include "guarnet/matrix.hpp"
#include "guarnet/rng.hpp"

#include "support/oracles.hpp"

namespace g = guarnet;
namespace gb = guarnet::gbdt;

namespace {

g::FeatureMatrix matrix_of(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& labels) {
  g::FeatureMatrix m;
  m.window_label = "fixture";
  std::size_t f = rows.empty() ? 0 : rows.front().size();
  for (std::size_t j = 0; j < f; ++j) {
    m.dimension_names.push_back("x" + std::to_string(j));
    m.categories.push_back(g::FeatureCategory::BP);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.instance_ids.push_back("R" + std::to_string(i));
    m.values.push_back(rows[i]);
    m.labels.push_back(labels[i]);
  }
  return m;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST(GradHess, LogitZeroLabelOne) {
  auto gh = gb::grad_hess(0.0, 1);
  EXPECT_DOUBLE_EQ(gh.g, -0.5);
  EXPECT_DOUBLE_EQ(gh.h, 0.25);
}

TEST(GradHess, LogitZeroLabelZero) {
  auto gh = gb::grad_hess(0.0, 0);
  EXPECT_DOUBLE_EQ(gh.g, 0.5);
  EXPECT_DOUBLE_EQ(gh.h, 0.25);
}

TEST(GradHess, LogitTwoMatchesFiniteDifferences) {
  auto gh = gb::grad_hess(2.0, 1);
  EXPECT_NEAR(gh.g, sigmoid(2.0) - 1.0, 1e-12);
  auto ref = oracle::finite_diff_grad_hess(2.0, 1);
  EXPECT_NEAR(gh.g, ref.g, 1e-4);
  EXPECT_NEAR(gh.h, ref.h, 1e-4);
  EXPECT_NEAR(gh.h, 0.10499, 1e-5);
}

TEST(LeafWeight, DirectFormula) {
  EXPECT_DOUBLE_EQ(gb::leaf_weight(4.0, 8.0, 1.0), -4.0 / 9.0);
  EXPECT_DOUBLE_EQ(gb::leaf_weight(0.0, 5.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(gb::leaf_weight(0.0, 0.0, 2.0), 0.0);
}

TEST(LeafWeight, MinimizesTheLeafObjective) {
  g::Rng rng(5150);
  for (int trial = 0; trial < 50; ++trial) {
    double G = rng.next_double() * 40.0 - 20.0;
    double H = rng.next_double() * 30.0;
    double lambda = rng.next_double() * 3.0 + 1e-6;
    double w = gb::leaf_weight(G, H, lambda);
    double numeric = oracle::quadratic_vertex_min(
        [&](double x) { return G * x + 0.5 * (H + lambda) * x * x; }, 0.0, 100.0);
    EXPECT_NEAR(w, numeric, 1e-8);
  }
}

TEST(SplitGain, MatchesHandComputedReduction) {
  double gain = gb::split_gain(-2.0, 2.0, 3.0, 3.0, 1.0, 0.0);
  EXPECT_NEAR(gain, 0.5 * (4.0 / 3.0 + 9.0 / 4.0 - 1.0 / 6.0), 1e-12);
}

TEST(BestSplit, SaturatedNodeHasNoSplit) {
  // All rows already confidently predicted as their own label: every
  // gradient is ~0, no candidate clears the gain bar.
  std::vector<std::vector<double>> rows = {{0.0}, {1.0}, {2.0}, {3.0}};
  std::vector<double> g(4), h(4);
  for (int i = 0; i < 4; ++i) {
    auto gh = gb::grad_hess(-30.0, 0);
    g[i] = gh.g;
    h[i] = gh.h;
  }
  gb::TrainParams params;
  params.min_child_hessian = 0.0;
  EXPECT_FALSE(gb::best_split(rows, g, h, params).has_value());
}

TEST(BestSplit, MatchesExhaustiveScan) {
  g::Rng rng(86753);
  for (int trial = 0; trial < 60; ++trial) {
    int n = static_cast<int>(rng.uniform_range(2, 12));
    int f = static_cast<int>(rng.uniform_range(1, 3));
    std::vector<std::vector<double>> rows(n, std::vector<double>(f));
    std::vector<double> g(n), h(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < f; ++j) rows[i][j] = rng.next_double();
      g[i] = rng.next_double() * 2.0 - 1.0;
      h[i] = rng.next_double() * 0.25 + 1e-3;
    }
    gb::TrainParams params;
    params.lambda = rng.next_double() * 2.0;
    params.min_child_hessian = 0.0;
    auto got = gb::best_split(rows, g, h, params);
    auto want = oracle::exhaustive_best_split(rows, g, h, params.lambda, 0.0, 0.0);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (!got) continue;
    EXPECT_NEAR(got->gain, want->gain, 1e-9);
  }
}

TEST(Train, AllNegativeLabelsDriveProbabilityDown) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  g::Rng rng(404);
  for (int i = 0; i < 30; ++i) {
    rows.push_back({rng.next_double(), rng.next_double()});
    labels.push_back(0);
  }
  auto m = matrix_of(rows, labels);
  gb::TrainParams params;
  params.rounds = 50;
  auto model = gb::train(m, params);
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_LE(gb::predict(model, rows[i]), 0.05);
}

TEST(Train, SeparableFixtureReachesPerfectTrainingAuc) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    double x = static_cast<double>(i) / 19.0;
    rows.push_back({x, 1.0 - x});
    labels.push_back(x > 0.5 ? 1 : 0);
  }
  auto m = matrix_of(rows, labels);
  gb::TrainParams params;
  params.rounds = 10;
  auto model = gb::train(m, params);
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (const auto& r : rows) scores.push_back(gb::predict(model, r));
  auto roc = g::auc(scores, labels);
  ASSERT_TRUE(roc.defined());
  EXPECT_DOUBLE_EQ(*roc.value, 1.0);
}

TEST(Train, DepthZeroGivesOneSharedLeaf) {
  std::vector<std::vector<double>> rows = {{0.0}, {1.0}, {2.0}, {3.0}};
  std::vector<int> labels = {0, 0, 1, 0};
  auto m = matrix_of(rows, labels);
  gb::TrainParams params;
  params.rounds = 1;
  params.max_depth = 0;
  auto model = gb::train(m, params);

  double G = 0.0, H = 0.0;
  for (int y : labels) {
    auto gh = gb::grad_hess(0.0, y);
    G += gh.g;
    H += gh.h;
  }
  double expected = sigmoid(0.0 + params.eta * (-G / (H + params.lambda)));
  for (const auto& r : rows) EXPECT_NEAR(gb::predict(model, r), expected, 1e-15);
}

TEST(Train, LogsNonIncreasingLoss) {
  g::Rng rng(11);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 80; ++i) {
    rows.push_back({rng.next_double(), rng.next_double(), rng.next_double()});
    labels.push_back(rows.back()[0] + 0.2 * rng.next_double() > 0.6 ? 1 : 0);
  }
  auto m = matrix_of(rows, labels);
  gb::TrainParams params;
  params.rounds = 50;
  gb::TrainLog log;
  auto model = gb::train(m, params, &log);
  ASSERT_FALSE(log.round_loss.empty());
  ASSERT_LE(log.round_loss.size(), 50u);
  double prev = log.initial_loss;
  for (double loss : log.round_loss) {
    EXPECT_LE(loss, prev + 1e-9);
    prev = loss;
  }
  EXPECT_EQ(model.trees.size(), log.round_loss.size());
}

TEST(Predict, EmptyEnsembleIsBaseScore) {
  gb::TreeEnsemble model;
  model.dimension_names = {"x0"};
  EXPECT_DOUBLE_EQ(gb::predict(model, {0.7}), 0.5);
}

TEST(Predict, SingleLeafTreeShiftsLogit) {
  gb::TreeEnsemble model;
  model.dimension_names = {"x0"};
  gb::TreeNode leaf;
  leaf.leaf = 1.0;
  gb::Tree tree;
  tree.nodes.push_back(leaf);
  model.trees.push_back(tree);
  EXPECT_NEAR(gb::predict(model, {0.7}), sigmoid(0.1), 1e-15);
}

TEST(Serialization, RoundTripPredictsIdentically) {
  g::Rng rng(2020);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({rng.next_double(), rng.next_double(), rng.next_double()});
    labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
  }
  auto m = matrix_of(rows, labels);
  gb::TrainParams params;
  params.rounds = 20;
  auto model = gb::train(m, params);

  auto json = gb::to_json(model);
  auto back = gb::ensemble_from_json(json);
  for (const auto& r : rows) {
    double a = gb::predict_logit(model, r);
    double b = gb::predict_logit(back, r);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof(double)), 0);
  }
}

TEST(Importance, PureLeafEnsembleIsUndefined) {
  gb::TreeEnsemble model;
  model.dimension_names = {"x0"};
  gb::TreeNode leaf;
  leaf.leaf = 0.3;
  gb::Tree tree;
  tree.nodes.push_back(leaf);
  model.trees.push_back(tree);
  auto imp = gb::importance(model, {g::FeatureCategory::BP});
  EXPECT_FALSE(imp.defined);
  for (double share : imp.category_share) EXPECT_EQ(share, 0.0);
}

TEST(Importance, CountsInternalNodesPerFeature) {
  std::vector<std::vector<double>> rows = {{0.0, 5.0}, {1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
  std::vector<int> labels = {0, 1, 0, 1};
  auto m = matrix_of(rows, labels);
  m.categories = {g::FeatureCategory::BP, g::FeatureCategory::NS};
  gb::TrainParams params;
  params.rounds = 3;
  params.min_child_hessian = 0.0;
  auto model = gb::train(m, params);

  auto imp = gb::importance(model, m.categories);
  ASSERT_TRUE(imp.defined);
  // Feature 1 is constant and can never split; every internal node uses x0.
  EXPECT_DOUBLE_EQ(imp.category_share[static_cast<int>(g::FeatureCategory::BP)], 1.0);
  EXPECT_DOUBLE_EQ(imp.category_share[static_cast<int>(g::FeatureCategory::NS)], 0.0);

  std::int64_t internal = 0;
  for (const auto& tree : model.trees) internal += tree.internal_count();
  std::int64_t counted = 0;
  for (std::int64_t c : imp.split_count) counted += c;
  EXPECT_EQ(counted, internal);
  EXPECT_EQ(imp.total_splits, internal);
}
