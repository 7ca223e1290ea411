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
#include "das/memory.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "das/error.hpp"

namespace das {
namespace {

bool pool_admits(const RetrievalConfig& config, const RetrievalContext& context, NodeId u) {
  if (config.candidate_pool == CandidatePool::kAll) return true;
  return u < context.train_mask.size() && context.train_mask[u];
}

bool passes_filters(const Memory& memory, const RetrievalConfig& config,
                    const RetrievalContext& context, NodeId u) {
  const auto& pred = memory.entry(u).predictive;
  if (pred.normalized_entropy > config.tau) return false;
  if (config.require_correct_train && context.annotations && u < context.train_mask.size() &&
      context.train_mask[u]) {
    const auto& label = context.annotations->labels.at(u);
    if (label && pred.predicted_class != *label) return false;
  }
  return true;
}

nlohmann::json sparse_json(const Eigen::VectorXd& v) {
  std::vector<Eigen::Index> idx;
  std::vector<double> val;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) {
      idx.push_back(i);
      val.push_back(v(i));
    }
  }
  return {{"indices", idx}, {"values", val}};
}

}  // namespace

std::vector<NodeId> ExemplarSet::nodes() const {
  std::vector<NodeId> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.node);
  return out;
}

Memory::Memory(std::vector<MemoryEntry> entries,
               std::shared_ptr<const StructuralEmbedding> structural, std::size_t iteration)
    : entries_(std::move(entries)), structural_(std::move(structural)), iteration_(iteration) {
  if (!structural_) throw ValidationError("memory requires a structural embedding");
  if (structural_->num_nodes() != entries_.size()) {
    throw ValidationError(fmt::format("memory has {} entries but structural embedding covers {}",
                                      entries_.size(), structural_->num_nodes()));
  }
  structural_rows_.reserve(entries_.size());
  for (NodeId v = 0; v < entries_.size(); ++v) {
    if (entries_[v].node != v) throw ValidationError("memory entries must be ordered by node id");
    structural_rows_.push_back(structural_->row(v));
  }
}

Memory build_memory(std::span<const std::string> descriptions,
                    std::span<const TextEmbedding> text_embeddings,
                    std::shared_ptr<const StructuralEmbedding> structural,
                    std::span<const PredictiveState> predictions, std::size_t iteration) {
  if (!structural) throw ValidationError("memory requires a structural embedding");
  const std::size_t n = structural->num_nodes();
  if (descriptions.size() != n || text_embeddings.size() != n || predictions.size() != n) {
    throw ValidationError(fmt::format(
        "memory coverage mismatch: {} descriptions, {} embeddings, {} predictions, {} nodes",
        descriptions.size(), text_embeddings.size(), predictions.size(), n));
  }
  std::vector<MemoryEntry> entries(n);
  for (NodeId v = 0; v < n; ++v) {
    entries[v] = MemoryEntry{v, descriptions[v], text_embeddings[v], predictions[v], iteration};
  }
  return Memory(std::move(entries), std::move(structural), iteration);
}

double semantic_similarity(NodeId v, NodeId u, const Memory& memory) {
  return cosine(memory.entry(v).text_embedding, memory.entry(u).text_embedding);
}

double structural_similarity(NodeId v, NodeId u, const Memory& memory) {
  if (v == u) return 1.0;
  const auto& a = memory.structural_row(v);
  const auto& b = memory.structural_row(u);
  if (a == b) return 1.0;
  return cosine(a, b);
}

double joint_score(NodeId v, NodeId u, double alpha, const Memory& memory) {
  return alpha * semantic_similarity(v, u, memory) +
         (1.0 - alpha) * structural_similarity(v, u, memory);
}

ExemplarSet retrieve(const Memory& memory, NodeId v, const RetrievalConfig& config,
                     const RetrievalContext& context) {
  if (v >= memory.size()) throw ValidationError(fmt::format("memory does not cover node {}", v));
  if (config.top_k < 1) throw ValidationError("top_k must be >= 1");
  std::vector<ScoredExemplar> scored;
  scored.reserve(memory.size());
  for (NodeId u = 0; u < memory.size(); ++u) {
    if (u == v || !pool_admits(config, context, u)) continue;
    scored.push_back(ScoredExemplar{u, joint_score(v, u, config.alpha, memory)});
  }
  const auto by_rank = [](const ScoredExemplar& a, const ScoredExemplar& b) {
    return a.score != b.score ? a.score > b.score : a.node < b.node;
  };
  const std::size_t k = std::min(config.top_k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    by_rank);
  ExemplarSet out;
  out.target = v;
  out.iteration = memory.iteration();
  for (std::size_t i = 0; i < k; ++i) {
    if (passes_filters(memory, config, context, scored[i].node)) out.members.push_back(scored[i]);
  }
  return out;
}

std::vector<ExemplarSet> serial::retrieve_all(const Memory& memory, const RetrievalConfig& config,
                                              const RetrievalContext& context) {
  std::vector<ExemplarSet> out;
  out.reserve(memory.size());
  for (NodeId v = 0; v < memory.size(); ++v) out.push_back(retrieve(memory, v, config, context));
  return out;
}

std::vector<ExemplarSet> retrieve_all(const Memory& memory, const RetrievalConfig& config,
                                      const RetrievalContext& context) {
  std::vector<ExemplarSet> out(memory.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(memory.size()); ++i) {
    out[static_cast<std::size_t>(i)] = retrieve(memory, static_cast<NodeId>(i), config, context);
  }
  return out;
}

void write_memory(const Memory& memory, const std::filesystem::path& path,
                  const std::string& structural_path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& e : memory.entries()) {
    const auto& p = e.predictive;
    const nlohmann::json record = {
        {"id", e.node},
        {"iteration", e.iteration},
        {"description", e.description},
        {"probabilities", std::vector<double>(p.probabilities.data(),
                                              p.probabilities.data() + p.probabilities.size())},
        {"entropy", p.entropy},
        {"normalized_entropy", p.normalized_entropy},
        {"predicted_class", p.predicted_class},
        {"top_prob", p.top_prob},
        {"text_embedding", sparse_json(e.text_embedding)},
        {"structural_embedding", structural_path}};
    out << record.dump() << '\n';
  }
}

Memory read_memory(const std::filesystem::path& path,
                   std::shared_ptr<const StructuralEmbedding> structural, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<MemoryEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  std::size_t iteration = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MemoryEntry e;
      e.node = j.at("id").get<NodeId>();
      e.iteration = iteration = j.at("iteration").get<std::size_t>();
      e.description = j.at("description").get<std::string>();
      const auto probs = j.at("probabilities").get<std::vector<double>>();
      e.predictive = PredictiveState::from_probabilities(
          Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size())));
      e.text_embedding = TextEmbedding::Zero(static_cast<Eigen::Index>(dim));
      const auto idx = j.at("text_embedding").at("indices").get<std::vector<Eigen::Index>>();
      const auto val = j.at("text_embedding").at("values").get<std::vector<double>>();
      for (std::size_t i = 0; i < idx.size(); ++i) e.text_embedding(idx[i]) = val.at(i);
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path.string(), lineno, ex.what());
    }
  }
  return Memory(std::move(entries), std::move(structural), iteration);
}

void write_exemplars(std::span<const ExemplarSet> sets, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& s : sets) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : s.members) members.push_back({{"id", m.node}, {"score", m.score}});
    out << nlohmann::json{{"target", s.target}, {"iteration", s.iteration}, {"members", members}}
               .dump()
        << '\n';
  }
}

std::vector<ExemplarSet> read_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<ExemplarSet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ExemplarSet s;
      s.target = j.at("target").get<NodeId>();
      s.iteration = j.at("iteration").get<std::size_t>();
      for (const auto& m : j.at("members")) {
        s.members.push_back({m.at("id").get<NodeId>(), m.at("score").get<double>()});
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path.string(), lineno, ex.what());
    }
  }
  return out;
}

}  // namespace das
