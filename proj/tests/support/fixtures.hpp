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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "das/gnn.hpp"
#include "das/graph.hpp"
#include "das/random.hpp"

namespace das::testing {

inline Graph make_graph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges,
                        GraphMeta meta = {}) {
  return Graph(n, edges, std::move(meta));
}

inline Graph triangle() { return make_graph(3, {{0, 1}, {1, 2}, {0, 2}}); }
inline Graph path3() { return make_graph(3, {{0, 1}, {1, 2}}); }
/// Center 0 with leaves 1..4.
inline Graph star4() { return make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}); }
inline Graph cycle(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId v = 0; v < n; ++v) e.emplace_back(v, static_cast<NodeId>((v + 1) % n));
  return make_graph(n, e);
}
inline Graph complete(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) e.emplace_back(a, b);
  return make_graph(n, e);
}
/// K4 without edge 2-3: nodes 0 and 1 have degree 3.
inline Graph k4_minus_edge() { return make_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}}); }

/// Five nodes, three classes, dense random features and a 2-layer GCN whose
/// weights are scaled up so ReLU pre-activations sit away from the kink.
struct GradientFixture {
  Graph graph;
  PropagationMatrix prop;
  Features x;
  std::vector<std::optional<std::uint32_t>> labels;
  std::vector<NodeId> nodes;
  ModelParams params;
};

inline GradientFixture gradient_fixture(std::uint64_t seed = 0, Backbone backbone = Backbone::kGcn) {
  GradientFixture f;
  f.graph = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}});
  f.prop = normalize_adjacency(f.graph);
  Rng rng(seed + 100);
  Eigen::MatrixXd dense(5, 6);
  for (Eigen::Index i = 0; i < dense.size(); ++i) dense.data()[i] = rng.uniform(-1.0, 1.0);
  f.x = dense.sparseView();
  f.labels = {0u, 1u, 2u, 1u, std::nullopt};
  f.nodes = {0, 1, 2, 3};
  f.params = ModelParams::init(backbone, {6, 4, 3}, seed);
  for (auto& layer : f.params.layers) {
    layer.weight *= 2.0;
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-0.3, 0.3);
  }
  return f;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "das") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace das::testing
