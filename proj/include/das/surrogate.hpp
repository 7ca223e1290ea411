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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "das/gnn.hpp"
#include "das/memory.hpp"
#include "das/text_encoder.hpp"

namespace das {

struct ObjectiveConfig {
  double lambda = 0.1;
  std::size_t max_support = 3;  // K of the admissible anchor sets
  /// Largest number of (node, subset) pairs exact R may enumerate.
  std::uint64_t subset_budget = 10'000'000;

  void validate() const;
};

/// Mean exemplar embedding per node; nodes with no exemplars have no anchor.
struct AnchorSet {
  std::vector<std::optional<Eigen::VectorXd>> anchors;
  std::vector<std::size_t> support;  // exemplar count per node
  std::vector<NodeId> excluded;

  std::vector<bool> included_mask() const;
  std::size_t max_support() const noexcept;
};

AnchorSet anchors_from_exemplars(std::span<const ExemplarSet> exemplar_sets, const Memory& memory);

/// Sum over anchored nodes of ||t_v - m_v||^2.
double omega(std::span<const TextEmbedding> embeddings, const AnchorSet& anchors);
double omega(std::span<const std::string> descriptions, const AnchorSet& anchors,
             const TextEncoder& encoder);

/// Number of (v, S) pairs exact R visits: |included| * sum_{k<=K} C(n-1, k).
std::uint64_t exact_subset_count(std::size_t num_nodes, std::size_t num_included,
                                 std::size_t max_support) noexcept;
bool exact_R_feasible(std::size_t num_nodes, std::size_t num_included,
                      const ObjectiveConfig& config) noexcept;

/// Sum over included v of the minimum, over nonempty S within V\{v} with
/// |S| <= K, of the squared distance from t_v to the mean of S. An empty
/// `include` means every node. Throws ValidationError when the enumeration
/// exceeds the subset budget.
double regularizer_R_exact(std::span<const TextEmbedding> embeddings,
                           const ObjectiveConfig& config, const std::vector<bool>& include = {});
double regularizer_R_exact(std::span<const std::string> descriptions, const TextEncoder& encoder,
                           const ObjectiveConfig& config, const std::vector<bool>& include = {});

/// Per-node minima behind regularizer_R_exact; excluded nodes hold 0.
std::vector<double> regularizer_R_terms(std::span<const TextEmbedding> embeddings,
                                        const ObjectiveConfig& config,
                                        const std::vector<bool>& include = {});

namespace serial {
double regularizer_R_exact(std::span<const TextEmbedding> embeddings,
                           const ObjectiveConfig& config, const std::vector<bool>& include = {});
}  // namespace serial

/// Classifier inputs needed to evaluate the supervised term.
struct SupervisedContext {
  const PropagationMatrix* prop = nullptr;
  const NodeAnnotations* annotations = nullptr;
  std::span<const NodeId> train_nodes;
};

/// Sum of -ln p_v(y_v) over training nodes for descriptions embedded as given.
double supervised_term(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                       const SupervisedContext& context);

struct ObjectiveValue {
  double supervised = 0.0;
  double regularizer = 0.0;  // R when exact, Omega otherwise
  double value = 0.0;
  bool exact = true;  // false: value is an upper bound on J
};

/// Supervised loss plus lambda * R. When exact R is out of budget the
/// regularizer falls back to Omega against `fallback` and the value is
/// flagged as an upper bound.
ObjectiveValue global_J(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                        const SupervisedContext& context, const ObjectiveConfig& config,
                        const std::vector<bool>& include = {},
                        const AnchorSet* fallback = nullptr);

/// Supervised loss plus lambda * Omega against fixed anchors.
double surrogate_U(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                   const AnchorSet& anchors, const SupervisedContext& context, double lambda);

struct MajorizationReport {
  double supervised = 0.0;
  double R = 0.0;
  double omega = 0.0;
  double J = 0.0;
  double U = 0.0;
  double margin = 0.0;  // U - J
  /// J with each node's admissible set restricted to its retrieved anchor.
  double J_restricted = 0.0;
  bool admissible = true;  // every anchor built from at most K exemplars
  bool majorizes = true;   // J <= U within tolerance
  bool tight_restricted = true;
};

/// `supervised` is the shared loss term; both sides use the same anchors mask.
MajorizationReport check_majorization(double supervised, std::span<const TextEmbedding> embeddings,
                                      const AnchorSet& anchors, const ObjectiveConfig& config,
                                      double tolerance = 1e-12);

struct TraceEntry {
  std::size_t iteration = 0;
  double J = 0.0;
  double supervised = 0.0;
  double regularizer = 0.0;
  bool exact = true;
  std::optional<double> omega;          // at D^t against the iteration-t anchors
  std::optional<double> omega_refined;  // at D^(t+1) against the same anchors
  std::optional<double> margin;         // lambda * (omega - R), exact runs only
  std::size_t anchored_nodes = 0;
  std::vector<NodeId> excluded;
  std::size_t refined_accepted = 0;
  bool model_accepted = true;  // descent guard kept the retrained parameters
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct ObjectiveTrace {
  double lambda = 0.0;
  std::vector<TraceEntry> entries;

  void write_json(const std::filesystem::path& path) const;
  static ObjectiveTrace read_json(const std::filesystem::path& path);
  friend bool operator==(const ObjectiveTrace&, const ObjectiveTrace&) = default;
};

struct DescentViolation {
  std::size_t iteration = 0;  // J rose between iteration and iteration + 1
  double increase = 0.0;
};

struct DescentReport {
  bool monotone = true;
  bool bounded = true;  // every J finite and >= 0
  bool all_exact = true;
  double max_increase = 0.0;
  std::vector<DescentViolation> violations;

  bool passed() const noexcept { return monotone && bounded; }
};

DescentReport check_descent(const ObjectiveTrace& trace, double tolerance);

}  // namespace das
