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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "das/graph.hpp"
#include "das/http.hpp"
#include "das/memory.hpp"
#include "das/text_encoder.hpp"

namespace das {

struct HistoryRecord {
  std::size_t iteration = 0;
  std::string description;
  std::size_t predicted_class = 0;
  std::optional<bool> correct;  // training nodes only
  double top_prob = 0.0;
  double entropy = 0.0;
};

/// Records in strictly increasing iteration order.
using NodeHistory = std::vector<HistoryRecord>;

/// Appends one record per node. Throws ValidationError if `iteration` does
/// not exceed a node's latest record.
void record_history(std::vector<NodeHistory>& histories, std::size_t iteration,
                    std::span<const std::string> descriptions,
                    std::span<const PredictiveState> predictions,
                    const NodeAnnotations& annotations, const std::vector<bool>& train_mask);

/// Per-graph values substituted into the refinement template.
struct PromptContext {
  std::string graph_type;
  const NodeAnnotations* annotations = nullptr;
  std::vector<std::string> topology;  // per-node topological summary
  std::vector<bool> train_mask;
};

struct RefinementPrompt {
  std::string system_text;
  std::string target_block;
  std::optional<std::string> history_block;
  std::optional<std::string> examples_block;
  std::string instructions_block;

  /// Everything after the system block, as sent in the user message.
  std::string user_text() const;
  /// The complete prompt, system block first.
  std::string render() const;
};

RefinementPrompt assemble_prompt(const MemoryEntry& target, const ExemplarSet& exemplars,
                                 const NodeHistory& history, const Memory& memory,
                                 const PromptContext& context, bool include_history,
                                 bool include_examples);

/// "0.2500, 0.2500" style rendering.
std::string format_probabilities(const Eigen::VectorXd& p);

struct RefineRequest {
  NodeId node = 0;
  std::size_t iteration = 0;
  const RefinementPrompt* prompt = nullptr;
  std::string_view current;
  std::vector<const TextEmbedding*> exemplar_embeddings;
  std::vector<std::string_view> exemplar_descriptions;
};

struct RefineOutcome {
  std::string text;
  bool ok = true;
  std::size_t attempts = 1;
  std::string error;
};

class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual std::string_view name() const noexcept = 0;
  /// Pure in its inputs for deterministic backends; must be thread-safe.
  virtual RefineOutcome refine(const RefineRequest& request) const = 0;
};

class IdentityRefiner final : public Refiner {
 public:
  std::string_view name() const noexcept override { return "identity"; }
  RefineOutcome refine(const RefineRequest& request) const override;
};

/// Greedily appends exemplar tokens, each move the single token that most
/// reduces the encoder-space distance to the exemplar mean; only strict
/// decreases are accepted.
class MockDescentRefiner final : public Refiner {
 public:
  MockDescentRefiner(const TextEncoder& encoder, std::size_t max_token_moves = 8);
  std::string_view name() const noexcept override { return "mock-descent"; }
  RefineOutcome refine(const RefineRequest& request) const override;

 private:
  const TextEncoder& encoder_;
  std::size_t max_token_moves_;
};

struct LlmConfig {
  std::string endpoint;
  std::string model_name;
  std::optional<std::string> api_key;
  double temperature = 0.0;
  std::size_t max_retries = 3;
  int timeout_ms = 60000;
  int backoff_ms = 500;
  std::size_t max_words = 200;
  /// Slash-separated path to the completion text in the response JSON.
  std::string response_path = "choices/0/message/content";
};

/// Applies DAS_LLM_ENDPOINT / DAS_LLM_API_KEY when set.
LlmConfig llm_config_from_env(LlmConfig base);

class LlmRefiner final : public Refiner {
 public:
  explicit LlmRefiner(LlmConfig config);
  std::string_view name() const noexcept override { return "llm-http"; }
  RefineOutcome refine(const RefineRequest& request) const override;
  const LlmConfig& config() const noexcept { return config_; }

 private:
  LlmConfig config_;
  Endpoint endpoint_;
};

/// Collapses the reply into one plain paragraph of at most `max_words` words.
std::string postprocess_completion(std::string_view raw, std::size_t max_words,
                                   bool* truncated = nullptr);
std::size_t whitespace_token_count(std::string_view text) noexcept;

struct LedgerEntry {
  NodeId node = 0;
  std::size_t iteration = 0;
  std::size_t prompt_tokens = 0;
  std::size_t response_tokens = 0;
  double latency_ms = 0.0;
  std::string status;  // "ok" or "failed"
  std::size_t attempts = 1;
};

/// Append-only record of refiner calls; appends are serialized.
class CallLedger {
 public:
  CallLedger() = default;
  CallLedger(const CallLedger& other) : entries_(other.entries()) {}
  CallLedger& operator=(const CallLedger& other) {
    if (this != &other) {
      auto copy = other.entries();
      const std::lock_guard lock(mutex_);
      entries_ = std::move(copy);
    }
    return *this;
  }
  void append(std::span<const LedgerEntry> entries);
  std::vector<LedgerEntry> entries() const;
  std::size_t size() const;
  void write_jsonl(const std::filesystem::path& path) const;
  static CallLedger read_jsonl(const std::filesystem::path& path);

 private:
  mutable std::mutex mutex_;
  std::vector<LedgerEntry> entries_;
};

struct RefineOptions {
  std::size_t concurrency_limit = 4;
  bool include_history = true;
  bool include_examples = true;
  /// Abort when more than this fraction of refined nodes fail.
  double max_failure_fraction = 0.5;
  /// Refine only these nodes when set; all nodes otherwise.
  std::optional<std::vector<NodeId>> node_subset;
};

struct RefineAllResult {
  std::vector<std::string> descriptions;  // one per node, ascending id
  std::vector<NodeId> failures;
  std::size_t calls = 0;
};

RefineAllResult refine_all(const Refiner& refiner, const Memory& memory,
                           std::span<const ExemplarSet> exemplar_sets,
                           std::span<const NodeHistory> histories, const PromptContext& context,
                           const RefineOptions& options, std::size_t iteration,
                           CallLedger& ledger);

}  // namespace das
