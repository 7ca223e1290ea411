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
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "das/graph.hpp"

namespace das {

enum class Backbone { kGcn, kMlp };

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
using PropagationMatrix = SparseRows;
using Features = SparseRows;

PropagationMatrix normalize_adjacency(const Graph& g);

struct DenseLayer {
  Eigen::MatrixXd weight;     // in_dim x out_dim
  Eigen::RowVectorXd bias;    // out_dim
};

struct ModelParams {
  Backbone backbone = Backbone::kGcn;
  std::vector<std::size_t> dims;  // dims.front() = input, dims.back() = num_classes
  std::vector<DenseLayer> layers;

  /// Glorot-uniform weights from `seed`, zero biases.
  static ModelParams init(Backbone backbone, std::vector<std::size_t> dims, std::uint64_t seed);
  std::size_t num_parameters() const;
  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

struct PredictiveState {
  Eigen::VectorXd probabilities;
  double entropy = 0.0;             // nats
  double normalized_entropy = 0.0;  // entropy / ln(num_classes)
  double top_prob = 0.0;
  std::size_t predicted_class = 0;

  static PredictiveState from_probabilities(Eigen::VectorXd probs);
};

struct TrainConfig {
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  double learning_rate = 1e-2;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::size_t max_epochs = 300;
  std::uint64_t seed = 0;
  Backbone backbone = Backbone::kGcn;
  bool warm_start = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean cross-entropy, dropout off
  double val_accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<PredictiveState> predictions;
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
};

/// Dropout settings for one forward pass; inactive when rate == 0.
struct DropoutKey {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

Eigen::MatrixXd forward_logits(const ModelParams& params, const Features& x,
                               const PropagationMatrix& prop, const DropoutKey& dropout = {});
std::vector<PredictiveState> forward(const ModelParams& params, const Features& x,
                                     const PropagationMatrix& prop);

/// Training objective: mean cross-entropy over `nodes` plus
/// (weight_decay / 2) * sum of squared weights (biases excluded). Writes the
/// analytic gradient into `grad` when non-null.
double objective_and_gradient(const ModelParams& params, const Features& x,
                              const PropagationMatrix& prop,
                              std::span<const std::optional<std::uint32_t>> labels,
                              std::span<const NodeId> nodes, double weight_decay,
                              const DropoutKey& dropout, ModelParams* grad);

/// Full-batch gradient descent keeping the best-validation snapshot (ties go
/// to the earliest epoch; epoch 0 is the initialization).
TrainResult train(const PropagationMatrix& prop, const Features& x,
                  const NodeAnnotations& annotations, const Splits& splits,
                  const TrainConfig& config, const ModelParams* warm_start = nullptr);

/// Sum of -ln p_v(y_v) over `nodes`; every node must be labeled.
double supervised_loss(std::span<const PredictiveState> predictions,
                       const NodeAnnotations& annotations, std::span<const NodeId> nodes);

double entropy(const Eigen::VectorXd& p) noexcept;
double normalized_entropy(const Eigen::VectorXd& p) noexcept;
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Fraction correct over `nodes`; throws ValidationError on an empty set.
double accuracy(std::span<const PredictiveState> predictions, const NodeAnnotations& annotations,
                std::span<const NodeId> nodes);

/// JSON header line followed by a text matrix body.
void write_model(const ModelParams& params, const TrainConfig& config,
                 const std::filesystem::path& path);
ModelParams read_model(const std::filesystem::path& path, TrainConfig* config = nullptr);

}  // namespace das
