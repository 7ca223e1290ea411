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
#include "das/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "das/error.hpp"
#include "das/random.hpp"

namespace das {
namespace {

using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

bool add_edge(EdgeSet& edges, NodeId a, NodeId b) {
  if (a == b) return false;
  return edges.insert({std::min(a, b), std::max(a, b)}).second;
}

// Index drawn with probability proportional to weights[0..limit).
NodeId weighted_pick(Rng& rng, const std::vector<double>& weights, std::size_t limit) {
  double total = 0.0;
  for (std::size_t i = 0; i < limit; ++i) total += weights[i];
  double x = rng.uniform() * total;
  for (std::size_t i = 0; i < limit; ++i) {
    x -= weights[i];
    if (x < 0.0) return static_cast<NodeId>(i);
  }
  return static_cast<NodeId>(limit - 1);
}

std::string pseudo_word(Rng& rng) {
  static constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "si",
                                               "pe", "do", "ga", "fi", "zu", "be", "ho", "ly"};
  std::string w;
  const std::size_t parts = 2 + rng.index(2);
  for (std::size_t i = 0; i < parts; ++i) w += kSyllables[rng.index(std::size(kSyllables))];
  return w;
}

}  // namespace

Dataset make_airport_like(std::uint64_t seed, const AirportLikeOptions& o) {
  const std::size_t n = o.num_nodes;
  if (n < 8) throw ValidationError("airport-like graph needs at least 8 nodes");
  if (o.num_edges < n - 1 || o.num_edges > n * (n - 1) / 2) {
    throw ValidationError(fmt::format("{} edges cannot form a connected simple graph on {} nodes",
                                      o.num_edges, n));
  }
  Rng rng(seed);
  EdgeSet edges;
  std::vector<double> weight(n, 1.0);
  // Spanning tree by preferential attachment keeps the graph connected.
  for (NodeId v = 1; v < n; ++v) {
    const NodeId u = weighted_pick(rng, weight, v);
    add_edge(edges, u, v);
    weight[u] += 1.0;
    weight[v] += 1.0;
  }
  while (edges.size() < o.num_edges) {
    const NodeId a = weighted_pick(rng, weight, n);
    const NodeId b = weighted_pick(rng, weight, n);
    if (add_edge(edges, a, b)) {
      weight[a] += 1.0;
      weight[b] += 1.0;
    }
  }
  const std::vector<std::pair<NodeId, NodeId>> pairs(edges.begin(), edges.end());
  Dataset d;
  d.graph = Graph(n, pairs, GraphMeta{"airport", "airport", "flight route"});

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return d.graph.degree(a) < d.graph.degree(b);
  });
  d.annotations.num_classes = 4;
  d.annotations.class_names = {"lowest activity", "low activity", "high activity",
                               "highest activity"};
  d.annotations.labels.assign(n, std::nullopt);
  for (std::size_t pos = 0; pos < n; ++pos) {
    d.annotations.labels[order[pos]] = static_cast<std::uint32_t>(std::min<std::size_t>(3, 4 * pos / n));
  }
  d.splits = make_splits(d.annotations, SplitRegime::kLowLabel, o.per_class_train,
                         o.per_class_val, mix64(seed ^ 0x5eedULL));
  return d;
}

Dataset make_citation_like(std::uint64_t seed, const CitationLikeOptions& o) {
  const std::size_t n = o.num_nodes;
  const std::size_t c = o.num_classes;
  if (c < 2 || n < 2 * c) throw ValidationError("citation-like graph needs >= 2 nodes per class");
  Rng rng(seed);

  std::vector<std::uint32_t> label(n);
  for (std::size_t v = 0; v < n; ++v) label[v] = static_cast<std::uint32_t>(v % c);
  rng.shuffle(std::span<std::uint32_t>(label));

  std::set<std::string> used;
  auto fresh_words = [&](std::size_t count) {
    std::vector<std::string> words;
    while (words.size() < count) {
      auto w = pseudo_word(rng);
      if (used.insert(w).second) words.push_back(std::move(w));
    }
    return words;
  };
  std::vector<std::vector<std::string>> topic(c);
  for (auto& t : topic) t = fresh_words(10);
  const std::vector<std::string> shared = {"we",      "study",  "the",     "method", "results",
                                           "propose", "models", "data",    "this",   "paper",
                                           "analysis", "show",  "approach", "based", "new"};

  Dataset d;
  d.annotations.num_classes = c;
  d.annotations.labels.assign(n, std::nullopt);
  d.annotations.raw_texts.assign(n, std::nullopt);
  for (std::size_t k = 0; k < c; ++k) d.annotations.class_names.push_back(fmt::format("topic {}", k));
  for (NodeId v = 0; v < n; ++v) {
    d.annotations.labels[v] = label[v];
    std::string text;
    for (std::size_t i = 0; i < o.words_per_text; ++i) {
      const double r = rng.uniform();
      const std::string* w;
      if (r < o.topic_fraction) {
        w = &topic[label[v]][rng.index(topic[label[v]].size())];
      } else if (r < o.topic_fraction + o.confuser_fraction) {
        const auto other = (label[v] + 1 + rng.index(c - 1)) % c;
        w = &topic[other][rng.index(topic[other].size())];
      } else {
        w = &shared[rng.index(shared.size())];
      }
      if (!text.empty()) text += ' ';
      text += *w;
    }
    text += '.';
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    d.annotations.raw_texts[v] = std::move(text);
  }

  std::vector<std::vector<NodeId>> members(c);
  for (NodeId v = 0; v < n; ++v) members[label[v]].push_back(v);
  EdgeSet edges;
  for (NodeId v = 0; v < n; ++v) {
    std::size_t added = 0;
    for (std::size_t attempt = 0; added < o.edges_per_node && attempt < 64; ++attempt) {
      NodeId u;
      if (rng.uniform() < o.homophily) {
        const auto& same = members[label[v]];
        u = same[rng.index(same.size())];
      } else {
        u = static_cast<NodeId>(rng.index(n));
      }
      if (add_edge(edges, u, v)) ++added;
    }
  }
  const std::vector<std::pair<NodeId, NodeId>> pairs(edges.begin(), edges.end());
  d.graph = Graph(n, pairs, GraphMeta{"citation network", "paper", "citation"});
  d.splits = make_splits(d.annotations, SplitRegime::kLowLabel, o.per_class_train,
                         o.per_class_val, mix64(seed ^ 0x5eedULL));
  return d;
}

Dataset make_descent_fixture(std::uint64_t seed) {
  CitationLikeOptions o;
  o.num_nodes = 30;
  o.num_classes = 3;
  o.words_per_text = 10;
  o.per_class_train = 3;
  o.per_class_val = 3;
  return make_citation_like(seed, o);
}

}  // namespace das
