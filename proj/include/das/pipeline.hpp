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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "das/config.hpp"
#include "das/gnn.hpp"
#include "das/graph.hpp"
#include "das/refinement.hpp"
#include "das/structural_embedding.hpp"
#include "das/structural_features.hpp"
#include "das/surrogate.hpp"
#include "das/text_encoder.hpp"

namespace das {

/// Reads graph, labels, optional texts and class names, and either reads or
/// generates the splits.
Dataset load_dataset(const DataConfig& config);

/// Text-attributed: raw text, one space, topological summary. Text-free:
/// the summary alone. Throws ValidationError naming nodes without text when
/// some but not all nodes carry one.
std::vector<std::string> initialize_descriptions(const Graph& g,
                                                 const NodeAnnotations& annotations,
                                                 const RankedProfile& ranked);

struct SplitAccuracy {
  double train = 0.0;
  double validation = 0.0;
  double test = 0.0;
  friend bool operator==(const SplitAccuracy&, const SplitAccuracy&) = default;
};

/// Throws ValidationError if any split is empty.
SplitAccuracy evaluate(std::span<const PredictiveState> predictions, const Splits& splits,
                       const NodeAnnotations& annotations);

/// Everything computed once per graph before the loop starts.
struct PreparedGraph {
  RankedProfile ranked;
  std::vector<std::string> topology;
  std::shared_ptr<const StructuralEmbedding> structural;
  PropagationMatrix propagation;
};

PreparedGraph prepare_graph(const Graph& g, const LoopConfig& loop, std::uint64_t seed);

struct RunOptions {
  /// Checkpoints and run artifacts go here when set.
  std::optional<std::filesystem::path> out_dir;
  /// Continue after the checkpoint of this iteration (requires out_dir).
  std::optional<std::size_t> resume_after;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::vector<std::string> initial_descriptions;
  std::vector<std::string> final_descriptions;
  ObjectiveTrace trace;
  CallLedger ledger;
  std::vector<SplitAccuracy> iteration_accuracy;  // model of each loop iteration
  SplitAccuracy accuracy;                         // final model
  std::vector<PredictiveState> final_predictions;
  ModelParams final_model;
  std::size_t refined_per_iteration = 0;
};

/// Algorithm loop: encode, train (descent-guarded), predict, build memory,
/// record history, retrieve, refine (optionally J-guarded), checkpoint; then
/// encode, train and evaluate once more on the final descriptions.
RunReport run_das(const Dataset& data, const RunConfig& config, const TextEncoder& encoder,
                  const Refiner& refiner, const RunOptions& options = {});

std::unique_ptr<Refiner> make_refiner(const RefinerConfig& config, const TextEncoder& encoder);

/// Writes trace.json, ledger.jsonl and report.json under `dir`.
void write_run_outputs(const RunReport& report, const std::filesystem::path& dir);

struct SeedSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> test_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one seed

  std::string format() const;  // "mean ± std"
};

SeedSummary summarize_seeds(std::vector<std::uint64_t> seeds, std::vector<double> accuracy);

/// Runs the loop once per seed (train seed = run seed) under `out_dir/seed_<s>`.
SeedSummary multi_seed(const Dataset& data, const RunConfig& config, const TextEncoder& encoder,
                       const Refiner& refiner, std::span<const std::uint64_t> seeds,
                       const std::optional<std::filesystem::path>& out_dir = {});

struct CostReport {
  std::size_t total_calls = 0;
  std::map<std::size_t, std::size_t> calls_per_iteration;
  std::size_t prompt_tokens = 0;
  std::size_t response_tokens = 0;
  std::size_t expected_calls = 0;  // refined nodes x iterations
  bool law_holds = false;          // every iteration has exactly the refined-node count
};

CostReport cost_report(std::span<const LedgerEntry> ledger, std::size_t refined_nodes,
                       std::size_t iterations);

/// Random search over the tuning grid, training once on `descriptions` per
/// draw and keeping the best validation accuracy (earliest draw on ties).
TrainConfig grid_search(const Dataset& data, const PreparedGraph& prepared,
                        std::span<const std::string> descriptions, const TextEncoder& encoder,
                        const TrainConfig& base, std::size_t draws, std::uint64_t seed);

}  // namespace das
