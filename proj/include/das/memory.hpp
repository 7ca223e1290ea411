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
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "das/gnn.hpp"
#include "das/graph.hpp"
#include "das/structural_embedding.hpp"
#include "das/text_encoder.hpp"

namespace das {

/// One state triple: description, its embedding, structural embedding, and
/// the classifier's predictive state at `iteration`.
struct MemoryEntry {
  NodeId node = 0;
  std::string description;
  TextEmbedding text_embedding;
  PredictiveState predictive;
  std::size_t iteration = 0;
};

/// A live memory snapshot. Immutable once built; the structural embedding is
/// shared (never recomputed) across snapshots.
class Memory {
 public:
  Memory(std::vector<MemoryEntry> entries,
         std::shared_ptr<const StructuralEmbedding> structural, std::size_t iteration);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t iteration() const noexcept { return iteration_; }
  const MemoryEntry& entry(NodeId v) const { return entries_.at(v); }
  std::span<const MemoryEntry> entries() const noexcept { return entries_; }
  const std::shared_ptr<const StructuralEmbedding>& structural() const noexcept {
    return structural_;
  }
  const Eigen::VectorXd& structural_row(NodeId v) const { return structural_rows_.at(v); }

 private:
  std::vector<MemoryEntry> entries_;
  std::shared_ptr<const StructuralEmbedding> structural_;
  std::vector<Eigen::VectorXd> structural_rows_;
  std::size_t iteration_;
};

/// Throws ValidationError unless every input covers all structural rows.
Memory build_memory(std::span<const std::string> descriptions,
                    std::span<const TextEmbedding> text_embeddings,
                    std::shared_ptr<const StructuralEmbedding> structural,
                    std::span<const PredictiveState> predictions, std::size_t iteration);

enum class CandidatePool { kAll, kTrainOnly };

struct RetrievalConfig {
  double alpha = 0.5;
  std::size_t top_k = 10;
  double tau = 0.5;  // on normalized entropy
  CandidatePool candidate_pool = CandidatePool::kAll;
  bool require_correct_train = true;
};

struct ScoredExemplar {
  NodeId node = 0;
  double score = 0.0;
  friend bool operator==(const ScoredExemplar&, const ScoredExemplar&) = default;
};

struct ExemplarSet {
  NodeId target = 0;
  std::vector<ScoredExemplar> members;  // non-increasing score
  std::size_t iteration = 0;

  std::vector<NodeId> nodes() const;
  friend bool operator==(const ExemplarSet&, const ExemplarSet&) = default;
};

/// Labels and training membership used by the pool and correctness filters.
struct RetrievalContext {
  const NodeAnnotations* annotations = nullptr;
  std::vector<bool> train_mask;
};

double semantic_similarity(NodeId v, NodeId u, const Memory& memory);
/// Cosine of structural embeddings; bitwise-identical rows (including two
/// zero rows from fully symmetric graphs) are treated as similarity 1.
double structural_similarity(NodeId v, NodeId u, const Memory& memory);
double joint_score(NodeId v, NodeId u, double alpha, const Memory& memory);

/// Candidates u != v ranked by joint score descending, ties by ascending id;
/// the top-K are then filtered by normalized entropy <= tau and, optionally,
/// by correct prediction on labeled training nodes.
ExemplarSet retrieve(const Memory& memory, NodeId v, const RetrievalConfig& config,
                     const RetrievalContext& context);
/// retrieve() for every node, targets processed in parallel.
std::vector<ExemplarSet> retrieve_all(const Memory& memory, const RetrievalConfig& config,
                                      const RetrievalContext& context);

namespace serial {
std::vector<ExemplarSet> retrieve_all(const Memory& memory, const RetrievalConfig& config,
                                      const RetrievalContext& context);
}  // namespace serial

/// JSON lines: description, probabilities, entropy, predicted class, top
/// prob, sparse text embedding; `structural_path` is recorded per entry.
void write_memory(const Memory& memory, const std::filesystem::path& path,
                  const std::string& structural_path);
/// Reads a dump back; the structural embedding is supplied by the caller.
Memory read_memory(const std::filesystem::path& path,
                   std::shared_ptr<const StructuralEmbedding> structural, std::size_t dim);

void write_exemplars(std::span<const ExemplarSet> sets, const std::filesystem::path& path);
std::vector<ExemplarSet> read_exemplars(const std::filesystem::path& path);

}  // namespace das
