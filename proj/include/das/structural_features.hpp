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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "das/graph.hpp"

namespace das {

enum class Statistic : std::size_t {
  kDegree = 0,
  kBetweenness,
  kCloseness,
  kClustering,
  kSquareClustering,
};
inline constexpr std::size_t kNumStatistics = 5;
inline constexpr std::array<Statistic, kNumStatistics> kAllStatistics = {
    Statistic::kDegree, Statistic::kBetweenness, Statistic::kCloseness, Statistic::kClustering,
    Statistic::kSquareClustering};

/// Display name used in the topological summary, e.g. "Betweenness Centrality".
std::string_view statistic_name(Statistic s) noexcept;
std::optional<Statistic> statistic_from_name(std::string_view name) noexcept;

struct StructuralProfile {
  std::vector<double> degree;
  std::vector<double> betweenness;
  std::vector<double> closeness;
  std::vector<double> clustering;
  std::vector<double> square_clustering;

  std::size_t num_nodes() const noexcept { return degree.size(); }
  const std::vector<double>& values(Statistic s) const;
};

struct RankedProfile {
  StructuralProfile values;
  /// ranks[stat][v], descending competition rank in [1, num_nodes].
  std::array<std::vector<std::size_t>, kNumStatistics> ranks;

  std::size_t rank(Statistic s, NodeId v) const {
    return ranks[static_cast<std::size_t>(s)].at(v);
  }
};

std::vector<double> compute_degree(const Graph& g);
/// Unnormalized, unordered-pair betweenness (Brandes accumulation).
/// Sources are processed in parallel blocks and reduced in source order, so
/// the result is bit-identical to serial::compute_betweenness.
std::vector<double> compute_betweenness(const Graph& g);
/// Closeness with the component-scaled variant for disconnected graphs.
std::vector<double> compute_closeness(const Graph& g);
std::vector<double> compute_clustering(const Graph& g);
/// Square clustering (Lind et al.), the networkx definition.
std::vector<double> compute_square_clustering(const Graph& g);
StructuralProfile compute_profile(const Graph& g);

namespace serial {
std::vector<double> compute_betweenness(const Graph& g);
std::vector<double> compute_closeness(const Graph& g);
std::vector<double> compute_square_clustering(const Graph& g);
}  // namespace serial

/// rank(v) = 1 + |{u : value(u) > value(v)}|.
std::vector<std::size_t> competition_rank(const std::vector<double>& values);
RankedProfile rank_profile(const StructuralProfile& profile);

/// Fixed-template topological summary for node `v`.
std::string verbalize_topology(NodeId v, const RankedProfile& ranked, const Graph& g);

struct ParsedProperty {
  Statistic statistic;
  std::string value_text;  // exactly as rendered
  double value;
  std::size_t rank;
  std::size_t num_nodes;
};
/// Recovers every property sentence from a rendered summary.
std::vector<ParsedProperty> parse_topology(std::string_view summary);

}  // namespace das
