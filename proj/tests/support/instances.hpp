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

#include <memory>
#include <string>
#include <vector>

#include "das/memory.hpp"
#include "das/random.hpp"
#include "das/structural_embedding.hpp"
#include "das/surrogate.hpp"
#include "das/text_encoder.hpp"
#include "oracles.hpp"

namespace das::testing {

/// Random memory with a small vocabulary (so semantic ties occur), a random
/// graph's structural embedding and a mix of one-hot, peaked and flat
/// predictions over three classes.
struct RetrievalInstance {
  std::vector<std::string> descriptions;
  std::vector<TextEmbedding> text;
  std::vector<Eigen::VectorXd> structural_rows;
  std::vector<PredictiveState> predictive;
  NodeAnnotations annotations;
  std::vector<bool> train_mask;
  std::shared_ptr<const StructuralEmbedding> structural;
  Memory memory;
  RetrievalContext context() const { return {&annotations, train_mask}; }
};

inline std::unique_ptr<RetrievalInstance> make_retrieval_instance(std::uint64_t seed,
                                                                  std::size_t n) {
  static const char* kWords[] = {"graph",  "node",    "citation", "neural", "learning",
                                 "kernel", "protein", "airport",  "route",  "theory"};
  Rng rng(seed);
  const HashEncoder enc(256);
  const Graph g = oracle::random_connected_graph(seed ^ 0xabcdef, n, 3.0 / static_cast<double>(n));
  auto structural = std::make_shared<const StructuralEmbedding>(embed_structural(g, 8, 2));

  std::vector<std::string> desc(n);
  std::vector<TextEmbedding> text(n);
  std::vector<PredictiveState> pred(n);
  NodeAnnotations ann;
  ann.num_classes = 3;
  ann.class_names = {"a", "b", "c"};
  std::vector<bool> mask(n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t words = rng.index(4);  // empty descriptions included
    for (std::size_t w = 0; w < words; ++w) desc[v] += std::string(w ? " " : "") + kWords[rng.index(10)];
    text[v] = enc.encode(desc[v]);
    Eigen::Vector3d p;
    switch (rng.index(3)) {
      case 0: p = Eigen::Vector3d::Unit(static_cast<Eigen::Index>(rng.index(3))); break;
      case 1: p = Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform()) + Eigen::Vector3d::Unit(0) * 4; break;
      default: p = Eigen::Vector3d(1, 1, 1) + 0.1 * Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform());
    }
    pred[v] = PredictiveState::from_probabilities(p / p.sum());
    if (rng.uniform() < 0.7) ann.labels.emplace_back(static_cast<std::uint32_t>(rng.index(3)));
    else ann.labels.emplace_back(std::nullopt);
    mask[v] = ann.labels.back().has_value() && rng.uniform() < 0.5;
  }
  std::vector<Eigen::VectorXd> rows;
  for (NodeId v = 0; v < n; ++v) rows.push_back(structural->row(v));
  Memory memory = build_memory(desc, text, structural, pred, 0);
  return std::make_unique<RetrievalInstance>(RetrievalInstance{
      std::move(desc), std::move(text), std::move(rows), std::move(pred), std::move(ann),
      std::move(mask), structural, std::move(memory)});
}

/// Random embeddings with admissible anchors: each node's anchor is the mean
/// of a random subset of at most K other nodes, or absent.
struct MajorizationFixture {
  std::vector<TextEmbedding> embeddings;
  AnchorSet anchors;
  std::vector<std::vector<NodeId>> exemplars;
};

inline MajorizationFixture make_majorization_fixture(std::uint64_t seed, std::size_t n,
                                                     std::size_t max_support, std::size_t dim) {
  Rng rng(seed);
  MajorizationFixture f;
  for (std::size_t v = 0; v < n; ++v) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = rng.uniform() < 0.4 ? 0.0 : rng.uniform();
    if (rng.uniform() < 0.15 && v > 0) t = f.embeddings[rng.index(v)];  // duplicates
    normalize_in_place(t);
    f.embeddings.push_back(t);
  }
  f.anchors.anchors.resize(n);
  f.anchors.support.assign(n, 0);
  f.exemplars.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    if (rng.uniform() < 0.15) {
      f.anchors.excluded.push_back(v);
      continue;
    }
    const std::size_t k = 1 + rng.index(std::min(max_support, n - 1));
    std::vector<NodeId> pool;
    for (NodeId u = 0; u < n; ++u)
      if (u != v) pool.push_back(u);
    rng.shuffle(std::span<NodeId>(pool));
    pool.resize(k);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const NodeId u : pool) m += f.embeddings[u];
    f.anchors.anchors[v] = m / static_cast<double>(k);
    f.anchors.support[v] = k;
    f.exemplars[v] = std::move(pool);
  }
  return f;
}

}  // namespace das::testing
