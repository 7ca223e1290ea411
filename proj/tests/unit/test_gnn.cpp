/**
 * Copyright 2026 The DAS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>

#include <cmath>

#include "das/error.hpp"
#include "das/gnn.hpp"
#include "das/random.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace das {
namespace {

// Floor on the relative-error denominator so exactly-zero gradients (dead
// ReLU units) compare by absolute error instead of 0/0.
constexpr double kGradFloor = 1e-7;

TEST(Adjacency, IsolatedNodeAndSingleEdge) {
  const auto a = normalize_adjacency(testing::make_graph(1, {}));
  EXPECT_EQ(Eigen::MatrixXd(a)(0, 0), 1.0);
  const Eigen::MatrixXd e = normalize_adjacency(testing::make_graph(2, {{0, 1}}));
  EXPECT_DOUBLE_EQ(e(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(e(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(e(1, 0), 0.5);
}

TEST(Adjacency, ExactlySymmetricWithUnitRange) {
  const Eigen::MatrixXd a = normalize_adjacency(oracle::random_connected_graph(3, 20, 0.2));
  EXPECT_EQ(a, a.transpose());
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LE(a.maxCoeff(), 1.0);
}

TEST(Softmax, HandComputedAndNormalized) {
  const auto p = softmax(Eigen::Vector2d(2.0, 0.0));
  EXPECT_NEAR(p(0), std::exp(2.0) / (std::exp(2.0) + 1.0), 1e-15);
  EXPECT_NEAR(p(0), 0.8808, 5e-5);
  EXPECT_NEAR(p(1), 0.1192, 5e-5);
  const auto big = softmax(Eigen::Vector3d(1000.0, 999.0, -1000.0));
  EXPECT_TRUE(big.allFinite());
  EXPECT_NEAR(big.sum(), 1.0, 1e-12);
}

TEST(Entropy, AnchorsAndBounds) {
  EXPECT_EQ(entropy(Eigen::Vector3d(0, 1, 0)), 0.0);
  EXPECT_NEAR(entropy(Eigen::Vector2d(0.5, 0.5)), std::log(2.0), 1e-12);
  for (const int c : {2, 3, 4, 7}) {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(c, 1.0 / c);
    EXPECT_NEAR(entropy(u), std::log(static_cast<double>(c)), 1e-12);
    EXPECT_NEAR(normalized_entropy(u), 1.0, 1e-12);
  }
  Rng rng(4);
  for (int rep = 0; rep < 1000; ++rep) {
    const int c = 2 + static_cast<int>(rng.index(6));
    Eigen::VectorXd p(c);
    for (int i = 0; i < c; ++i) p(i) = rng.uniform() * (rng.uniform() < 0.2 ? 0.0 : 1.0) + 1e-300;
    p /= p.sum();
    EXPECT_LE(entropy(p), std::log(static_cast<double>(c)) + 1e-12);
    EXPECT_GE(entropy(p), 0.0);
  }
}

TEST(PredictiveState, DerivedFields) {
  const auto s = PredictiveState::from_probabilities(Eigen::Vector3d(0.2, 0.5, 0.3));
  EXPECT_EQ(s.predicted_class, 1u);
  EXPECT_EQ(s.top_prob, 0.5);
  EXPECT_NEAR(s.normalized_entropy, s.entropy / std::log(3.0), 1e-15);
}

TEST(Forward, ZeroParametersGiveUniform) {
  auto f = testing::gradient_fixture();
  for (auto& layer : f.params.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  for (const auto& s : forward(f.params, f.x, f.prop)) {
    EXPECT_NEAR(s.entropy, std::log(3.0), 1e-12);
    EXPECT_NEAR(s.probabilities.sum(), 1.0, 1e-9);
  }
}

TEST(Forward, MlpIgnoresGraph) {
  const Graph g = testing::make_graph(2, {{0, 1}});
  Eigen::MatrixXd dense(2, 3);
  dense << 1, 0, 2, 1, 0, 2;
  const Features x = dense.sparseView();
  const auto params = ModelParams::init(Backbone::kMlp, {3, 4, 2}, 1);
  const auto out = forward(params, x, normalize_adjacency(g));
  EXPECT_EQ(out[0].probabilities, out[1].probabilities);
}

TEST(Gradient, GcnMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = testing::gradient_fixture(seed);
    const auto check = oracle::finite_difference_check(f.params, f.x, f.prop, f.labels, f.nodes,
                                                       5e-4, {}, 1e-5, kGradFloor);
    EXPECT_EQ(check.parameters, f.params.num_parameters());
    EXPECT_LT(check.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, MlpAndDropoutPathsMatchCentralDifferences) {
  const auto mlp = testing::gradient_fixture(7, Backbone::kMlp);
  EXPECT_LT(oracle::finite_difference_check(mlp.params, mlp.x, mlp.prop, mlp.labels, mlp.nodes,
                                            0.0, {}, 1e-5, kGradFloor)
                .max_relative_error,
            1e-4);
  const auto gcn = testing::gradient_fixture(8);
  const DropoutKey key{0.5, 3, 11};
  EXPECT_LT(oracle::finite_difference_check(gcn.params, gcn.x, gcn.prop, gcn.labels, gcn.nodes,
                                            5e-4, key, 1e-5, kGradFloor)
                .max_relative_error,
            1e-4);
}

struct Separable {
  Graph graph = testing::make_graph(4, {{0, 1}, {2, 3}});
  Features x;
  NodeAnnotations annotations;
  Splits splits{{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}};
  Separable() {
    Eigen::MatrixXd dense(4, 2);
    dense << 1, 0, 1, 0, 0, 1, 0, 1;
    x = dense.sparseView();
    annotations.labels = {0u, 0u, 1u, 1u};
    annotations.num_classes = 2;
    annotations.class_names = {"a", "b"};
  }
};

TrainConfig small_config() {
  TrainConfig c;
  c.hidden_dim = 8;
  c.learning_rate = 0.1;
  c.dropout = 0.0;
  c.max_epochs = 200;
  c.seed = 2;
  return c;
}

TEST(Train, SeparableFixtureReachesFullAccuracy) {
  const Separable s;
  const auto result = train(normalize_adjacency(s.graph), s.x, s.annotations, s.splits, small_config());
  EXPECT_EQ(accuracy(result.predictions, s.annotations, s.splits.train), 1.0);
  EXPECT_EQ(result.trace.size(), 201u);
  EXPECT_LT(result.trace.back().train_loss, result.trace.front().train_loss);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const Separable s;
  auto config = small_config();
  config.learning_rate = 0.0;
  config.dropout = 0.5;
  const auto result = train(normalize_adjacency(s.graph), s.x, s.annotations, s.splits, config);
  EXPECT_EQ(result.params, ModelParams::init(Backbone::kGcn, {2, 8, 2}, config.seed));
  for (const auto& rec : result.trace) EXPECT_EQ(rec.train_loss, result.trace.front().train_loss);
  EXPECT_EQ(result.best_epoch, 0u);
}

TEST(Train, BitIdenticalAcrossRuns) {
  const Separable s;
  auto config = small_config();
  config.dropout = 0.5;
  const auto prop = normalize_adjacency(s.graph);
  const auto a = train(prop, s.x, s.annotations, s.splits, config);
  const auto b = train(prop, s.x, s.annotations, s.splits, config);
  EXPECT_EQ(a.params, b.params);
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].train_loss, b.trace[i].train_loss);
  for (std::size_t v = 0; v < 4; ++v)
    EXPECT_EQ(a.predictions[v].probabilities, b.predictions[v].probabilities);
}

TEST(Train, WarmStartRequiresMatchingArchitecture) {
  const Separable s;
  auto config = small_config();
  config.warm_start = true;
  const auto wrong = ModelParams::init(Backbone::kGcn, {2, 4, 2}, 0);
  EXPECT_THROW(train(normalize_adjacency(s.graph), s.x, s.annotations, s.splits, config, &wrong),
               ValidationError);
}

TEST(Loss, SupervisedLossExamples) {
  NodeAnnotations ann;
  ann.labels = {0u, 1u, std::nullopt};
  ann.num_classes = 2;
  const std::vector<PredictiveState> onehot{
      PredictiveState::from_probabilities(Eigen::Vector2d(1, 0)),
      PredictiveState::from_probabilities(Eigen::Vector2d(0, 1)),
      PredictiveState::from_probabilities(Eigen::Vector2d(0.5, 0.5))};
  const std::vector<NodeId> both{0, 1};
  EXPECT_EQ(supervised_loss(onehot, ann, both), 0.0);
  const std::vector<PredictiveState> uniform(2, PredictiveState::from_probabilities(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_NEAR(supervised_loss(uniform, ann, both), 2.0 * std::log(2.0), 1e-12);
  const std::vector<NodeId> unlabeled{2};
  EXPECT_THROW(supervised_loss(onehot, ann, unlabeled), ValidationError);

  NodeAnnotations four;
  four.labels = {3u};
  four.num_classes = 4;
  const std::vector<PredictiveState> u4{PredictiveState::from_probabilities(Eigen::Vector4d::Constant(0.25))};
  const std::vector<NodeId> first{0};
  EXPECT_NEAR(supervised_loss(u4, four, first), std::log(4.0), 1e-12);
  EXPECT_THROW(accuracy(u4, four, {}), ValidationError);
}

TEST(ModelIo, RoundTripIsExact) {
  testing::TempDir dir;
  const auto f = testing::gradient_fixture(3);
  TrainConfig config = small_config();
  config.weight_decay = 5e-5;
  write_model(f.params, config, dir / "model.txt");
  TrainConfig back_config;
  const auto back = read_model(dir / "model.txt", &back_config);
  EXPECT_EQ(back, f.params);
  EXPECT_EQ(back_config.hidden_dim, config.hidden_dim);
  EXPECT_EQ(back_config.weight_decay, config.weight_decay);
  EXPECT_EQ(back_config.seed, config.seed);
}

}  // namespace
}  // namespace das
