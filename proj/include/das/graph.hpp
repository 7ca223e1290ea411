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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace das {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u = 0;  // u < v
  NodeId v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GraphMeta {
  std::string graph_type = "generic";
  std::string node_type = "node";
  std::string edge_type = "edge";
};

/// Immutable undirected simple graph over dense ids 0..num_nodes-1.
class Graph {
 public:
  Graph() = default;
  /// Deduplicates and canonicalizes `pairs`. Throws ValidationError on
  /// self-loops or endpoints >= num_nodes.
  Graph(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> pairs,
        GraphMeta meta = {});

  std::size_t num_nodes() const noexcept { return adjacency_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_.at(v); }
  std::size_t degree(NodeId v) const { return adjacency_.at(v).size(); }
  bool has_edge(NodeId a, NodeId b) const;
  const GraphMeta& meta() const noexcept { return meta_; }
  void set_meta(GraphMeta meta) { meta_ = std::move(meta); }

  /// Number of duplicate (including reversed) pairs collapsed at construction.
  std::size_t collapsed_duplicates() const noexcept { return collapsed_; }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.adjacency_ == b.adjacency_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<Edge> edges_;
  GraphMeta meta_;
  std::size_t collapsed_ = 0;
};

/// Maps external string node ids onto dense integers in first-seen order.
class IdTable {
 public:
  NodeId intern(const std::string& external);
  std::optional<NodeId> find(const std::string& external) const;
  const std::string& external(NodeId id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }

  void save(const std::filesystem::path& path) const;
  static IdTable load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::string> names_;
};

struct NodeAnnotations {
  std::vector<std::optional<std::string>> raw_texts;  // empty vector: text-free
  std::vector<std::optional<std::uint32_t>> labels;   // sized num_nodes
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;  // sized num_classes

  bool has_texts() const noexcept { return !raw_texts.empty(); }
  bool labeled(NodeId v) const { return labels.at(v).has_value(); }
  const std::string& class_name(std::size_t c) const;
};

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;

  /// Per-node membership mask for `train`.
  std::vector<bool> train_mask(std::size_t num_nodes) const;
  friend bool operator==(const Splits&, const Splits&) = default;
};

enum class SplitRegime { kLowLabel, kHighLabel };

/// One edge per line, `<u><sep><v>` with sep in {space, tab, comma}. Lines
/// that are empty or start with '#' are skipped. `min_nodes` allows trailing
/// isolated nodes.
Graph load_edge_list(const std::filesystem::path& path, std::size_t min_nodes = 0,
                     GraphMeta meta = {});
/// Same format, but ids are arbitrary tokens mapped through `ids`.
Graph load_edge_list_with_ids(const std::filesystem::path& path, IdTable& ids,
                              GraphMeta meta = {});
void write_edge_list(const Graph& g, const std::filesystem::path& path);

/// Labels: `<node-id>,<class-index>` per line. Texts (optional): either
/// `<node-id>\t<text>` lines or JSON lines with `id` and `text` fields.
NodeAnnotations load_annotations(const std::optional<std::filesystem::path>& texts_path,
                                 const std::filesystem::path& labels_path,
                                 std::size_t num_nodes);
/// One class name per line; must match `annotations.num_classes`.
void load_class_names(NodeAnnotations& annotations, const std::filesystem::path& path);

Splits make_splits(const NodeAnnotations& annotations, SplitRegime regime,
                   std::size_t per_class_train, std::size_t per_class_val,
                   std::uint64_t seed);

void write_splits(const Splits& splits, const std::filesystem::path& path);

struct Dataset {
  Graph graph;
  NodeAnnotations annotations;
  Splits splits;
};

/// Writes edges.txt, labels.csv, class_names.txt, splits.json and, for
/// text-attributed data, texts.tsv into `dir`.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Splits read_splits(const std::filesystem::path& path);

}  // namespace das
