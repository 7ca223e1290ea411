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
#include "das/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "das/error.hpp"
#include "das/random.hpp"

namespace das {
namespace {

constexpr std::uint64_t kMaxNodeId = std::numeric_limits<NodeId>::max() - 1;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' ||
                               line[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != ',' &&
           line[i] != '\r') {
      ++i;
    }
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool skippable(std::string_view line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#';
}

std::uint64_t parse_id(std::string_view field, const std::string& path, std::size_t line) {
  std::uint64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec == std::errc::result_out_of_range) {
    throw ParseError(path, line, fmt::format("node id '{}' overflows", field));
  }
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path, line, fmt::format("expected a non-negative integer, got '{}'", field));
  }
  if (value > kMaxNodeId) {
    throw ParseError(path, line, fmt::format("node id {} overflows", value));
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

void warn_collapsed(const Graph& g, const std::filesystem::path& path) {
  if (g.collapsed_duplicates() > 0) {
    spdlog::warn("{}: collapsed {} duplicate or reversed edge(s); input symmetrized",
                 path.string(), g.collapsed_duplicates());
  }
}

}  // namespace

Graph::Graph(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> pairs,
             GraphMeta meta)
    : adjacency_(num_nodes), meta_(std::move(meta)) {
  edges_.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    if (a == b) throw ValidationError(fmt::format("self-loop at node {}", a));
    if (a >= num_nodes || b >= num_nodes) {
      throw ValidationError(
          fmt::format("edge ({}, {}) has an endpoint >= num_nodes={}", a, b, num_nodes));
    }
    edges_.push_back(Edge{std::min(a, b), std::max(a, b)});
  }
  std::sort(edges_.begin(), edges_.end());
  const auto last = std::unique(edges_.begin(), edges_.end());
  collapsed_ = static_cast<std::size_t>(edges_.end() - last);
  edges_.erase(last, edges_.end());
  for (const Edge& e : edges_) {
    adjacency_[e.u].push_back(e.v);
    adjacency_[e.v].push_back(e.u);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  const auto& nbrs = adjacency_.at(a);
  return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

NodeId IdTable::intern(const std::string& external) {
  const auto [it, inserted] = index_.try_emplace(external, static_cast<NodeId>(names_.size()));
  if (inserted) names_.push_back(external);
  return it->second;
}

std::optional<NodeId> IdTable::find(const std::string& external) const {
  const auto it = index_.find(external);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void IdTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (std::size_t i = 0; i < names_.size(); ++i) out << i << '\t' << names_[i] << '\n';
}

IdTable IdTable::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  IdTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path.string(), lineno, "expected '<id>\\t<name>'");
    const auto id = parse_id(std::string_view(line).substr(0, tab), path.string(), lineno);
    if (id != table.size()) throw ParseError(path.string(), lineno, "ids must be dense and ordered");
    table.intern(line.substr(tab + 1));
  }
  return table;
}

const std::string& NodeAnnotations::class_name(std::size_t c) const {
  if (c >= class_names.size()) {
    throw ValidationError(fmt::format("no class name for class index {}", c));
  }
  return class_names[c];
}

std::vector<bool> Splits::train_mask(std::size_t num_nodes) const {
  std::vector<bool> mask(num_nodes, false);
  for (NodeId v : train) mask.at(v) = true;
  return mask;
}

Graph load_edge_list(const std::filesystem::path& path, std::size_t min_nodes, GraphMeta meta) {
  auto in = open_input(path);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::size_t num_nodes = min_nodes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw ParseError(path.string(), lineno,
                       fmt::format("expected two node ids, found {} field(s)", fields.size()));
    }
    const auto a = parse_id(fields[0], path.string(), lineno);
    const auto b = parse_id(fields[1], path.string(), lineno);
    if (a == b) throw ParseError(path.string(), lineno, fmt::format("self-loop at node {}", a));
    pairs.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    num_nodes = std::max<std::size_t>(num_nodes, std::max(a, b) + 1);
  }
  if (pairs.empty()) throw ParseError(path.string(), 0, "edge list is empty");
  Graph g(num_nodes, pairs, std::move(meta));
  warn_collapsed(g, path);
  return g;
}

Graph load_edge_list_with_ids(const std::filesystem::path& path, IdTable& ids, GraphMeta meta) {
  auto in = open_input(path);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw ParseError(path.string(), lineno,
                       fmt::format("expected two node ids, found {} field(s)", fields.size()));
    }
    if (fields[0] == fields[1]) {
      throw ParseError(path.string(), lineno, fmt::format("self-loop at node '{}'", fields[0]));
    }
    const NodeId a = ids.intern(std::string(fields[0]));
    const NodeId b = ids.intern(std::string(fields[1]));
    pairs.emplace_back(a, b);
  }
  if (pairs.empty()) throw ParseError(path.string(), 0, "edge list is empty");
  Graph g(ids.size(), pairs, std::move(meta));
  warn_collapsed(g, path);
  return g;
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

NodeAnnotations load_annotations(const std::optional<std::filesystem::path>& texts_path,
                                 const std::filesystem::path& labels_path,
                                 std::size_t num_nodes) {
  NodeAnnotations ann;
  ann.labels.assign(num_nodes, std::nullopt);
  {
    auto in = open_input(labels_path);
    std::string line;
    std::size_t lineno = 0;
    std::int64_t max_label = -1;
    while (std::getline(in, line)) {
      ++lineno;
      if (skippable(line)) continue;
      const auto fields = split_fields(line);
      if (fields.size() != 2) {
        throw ParseError(labels_path.string(), lineno, "expected '<node-id>,<class-index>'");
      }
      const auto id = parse_id(fields[0], labels_path.string(), lineno);
      if (id >= num_nodes) {
        throw ParseError(labels_path.string(), lineno, fmt::format("unknown node id {}", id));
      }
      std::int64_t label = 0;
      const auto* end = fields[1].data() + fields[1].size();
      const auto [ptr, ec] = std::from_chars(fields[1].data(), end, label);
      if (ec != std::errc() || ptr != end) {
        throw ParseError(labels_path.string(), lineno,
                         fmt::format("invalid class index '{}'", fields[1]));
      }
      if (label < 0) {
        throw ParseError(labels_path.string(), lineno, fmt::format("negative label {}", label));
      }
      ann.labels[id] = static_cast<std::uint32_t>(label);
      max_label = std::max(max_label, label);
    }
    ann.num_classes = static_cast<std::size_t>(max_label + 1);
    for (std::size_t c = 0; c < ann.num_classes; ++c) {
      ann.class_names.push_back(fmt::format("class_{}", c));
    }
  }
  if (texts_path) {
    ann.raw_texts.assign(num_nodes, std::nullopt);
    auto in = open_input(*texts_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (skippable(line)) continue;
      std::uint64_t id = 0;
      std::string text;
      const auto first = line.find_first_not_of(" \t");
      if (line[first] == '{') {
        try {
          const auto record = nlohmann::json::parse(line);
          id = record.at("id").get<std::uint64_t>();
          text = record.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
          throw ParseError(texts_path->string(), lineno, e.what());
        }
      } else {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
          throw ParseError(texts_path->string(), lineno, "expected '<node-id>\\t<text>'");
        }
        id = parse_id(std::string_view(line).substr(0, tab), texts_path->string(), lineno);
        text = line.substr(tab + 1);
        if (!text.empty() && text.back() == '\r') text.pop_back();
      }
      if (id >= num_nodes) {
        throw ParseError(texts_path->string(), lineno, fmt::format("unknown node id {}", id));
      }
      ann.raw_texts[id] = std::move(text);
    }
  }
  return ann;
}

void load_class_names(NodeAnnotations& annotations, const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  if (names.size() != annotations.num_classes) {
    throw ValidationError(fmt::format("{} lists {} class names, labels imply {}", path.string(),
                                      names.size(), annotations.num_classes));
  }
  annotations.class_names = std::move(names);
}

namespace {

// Largest-remainder apportionment of `total` across groups sized `sizes`.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
  const std::size_t grand = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (grand == 0) return quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[c]) /
                         static_cast<double>(grand);
    quota[c] = static_cast<std::size_t>(exact);
    assigned += quota[c];
    remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (quota[c] < sizes[c]) {
      ++quota[c];
      ++assigned;
    }
  }
  return quota;
}

}  // namespace

Splits make_splits(const NodeAnnotations& annotations, SplitRegime regime,
                   std::size_t per_class_train, std::size_t per_class_val, std::uint64_t seed) {
  std::vector<std::vector<NodeId>> by_class(annotations.num_classes);
  for (NodeId v = 0; v < annotations.labels.size(); ++v) {
    if (const auto& label = annotations.labels[v]) by_class.at(*label).push_back(v);
  }
  Rng rng(seed);
  for (auto& members : by_class) rng.shuffle(std::span<NodeId>(members));

  std::vector<std::size_t> train_quota(by_class.size());
  std::vector<std::size_t> val_quota(by_class.size());
  if (regime == SplitRegime::kLowLabel) {
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].size() < per_class_train + per_class_val) {
        throw ValidationError(fmt::format(
            "class {} has {} labeled node(s); low-label split needs {} train + {} validation", c,
            by_class[c].size(), per_class_train, per_class_val));
      }
      train_quota[c] = per_class_train;
      val_quota[c] = per_class_val;
    }
  } else {
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    for (const auto& members : by_class) {
      sizes.push_back(members.size());
      total += members.size();
    }
    const auto n_train = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(total)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(total)));
    train_quota = apportion(sizes, n_train);
    std::vector<std::size_t> rest(sizes.size());
    for (std::size_t c = 0; c < sizes.size(); ++c) rest[c] = sizes[c] - train_quota[c];
    val_quota = apportion(sizes, n_val);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      val_quota[c] = std::min(val_quota[c], rest[c]);
      if (train_quota[c] == 0 && sizes[c] > 0) {
        throw ValidationError(fmt::format("class {} too small for a high-label split", c));
      }
    }
  }

  Splits splits;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& members = by_class[c];
    std::size_t i = 0;
    for (; i < train_quota[c]; ++i) splits.train.push_back(members[i]);
    for (; i < train_quota[c] + val_quota[c]; ++i) splits.validation.push_back(members[i]);
    for (; i < members.size(); ++i) splits.test.push_back(members[i]);
  }
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.validation.begin(), splits.validation.end());
  std::sort(splits.test.begin(), splits.test.end());
  return splits;
}

void write_splits(const Splits& splits, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  const nlohmann::json j = {
      {"train", splits.train}, {"validation", splits.validation}, {"test", splits.test}};
  out << j.dump() << '\n';
}

Splits read_splits(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    const auto j = nlohmann::json::parse(in);
    Splits s;
    s.train = j.at("train").get<std::vector<NodeId>>();
    s.validation = j.at("validation").get<std::vector<NodeId>>();
    s.test = j.at("test").get<std::vector<NodeId>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edge_list(data.graph, dir / "edges.txt");
  {
    std::ofstream out(dir / "labels.csv");
    if (!out) throw IoError(fmt::format("cannot write '{}'", (dir / "labels.csv").string()));
    for (NodeId v = 0; v < data.annotations.labels.size(); ++v) {
      if (const auto& y = data.annotations.labels[v]) out << v << ',' << *y << '\n';
    }
  }
  {
    std::ofstream out(dir / "class_names.txt");
    for (const auto& name : data.annotations.class_names) out << name << '\n';
  }
  if (data.annotations.has_texts()) {
    std::ofstream out(dir / "texts.tsv");
    for (NodeId v = 0; v < data.annotations.raw_texts.size(); ++v) {
      const auto& text = data.annotations.raw_texts[v];
      if (!text) continue;
      if (text->find_first_of("\t\n") != std::string::npos) {
        throw ValidationError(fmt::format("text of node {} contains a tab or newline", v));
      }
      out << v << '\t' << *text << '\n';
    }
  }
  write_splits(data.splits, dir / "splits.json");
}

}  // namespace das
