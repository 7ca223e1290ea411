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
#include "das/structural_features.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <regex>

#include <fmt/format.h>

#include "das/error.hpp"

namespace das {
namespace {

constexpr std::array<std::string_view, kNumStatistics> kNames = {
    "Degree", "Betweenness Centrality", "Closeness Centrality", "Clustering Coefficient",
    "Square Clustering Coefficient"};

constexpr std::int64_t kUnreached = -1;

// Single-source Brandes dependency accumulation; writes delta[w] for all w.
struct BrandesScratch {
  std::vector<std::int64_t> dist;
  std::vector<double> sigma;
  std::vector<NodeId> order;
  std::vector<NodeId> queue;

  explicit BrandesScratch(std::size_t n) : dist(n), sigma(n) {
    order.reserve(n);
    queue.reserve(n);
  }
};

void brandes_source(const Graph& g, NodeId s, BrandesScratch& scratch, double* delta) {
  const std::size_t n = g.num_nodes();
  auto& dist = scratch.dist;
  auto& sigma = scratch.sigma;
  auto& order = scratch.order;
  auto& queue = scratch.queue;
  std::fill(dist.begin(), dist.end(), kUnreached);
  std::fill(sigma.begin(), sigma.end(), 0.0);
  std::fill(delta, delta + n, 0.0);
  order.clear();
  queue.clear();

  dist[s] = 0;
  sigma[s] = 1.0;
  queue.push_back(s);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId v = queue[head];
    order.push_back(v);
    for (const NodeId w : g.neighbors(v)) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
      if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId w = *it;
    for (const NodeId v : g.neighbors(w)) {
      if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
    }
  }
  delta[s] = 0.0;
}

// Returns (reachable count including v, total distance to reachable nodes).
std::pair<std::size_t, std::uint64_t> bfs_distance_sum(const Graph& g, NodeId v,
                                                       std::vector<std::int64_t>& dist,
                                                       std::vector<NodeId>& queue) {
  std::fill(dist.begin(), dist.end(), kUnreached);
  queue.clear();
  dist[v] = 0;
  queue.push_back(v);
  std::uint64_t total = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId x = queue[head];
    total += static_cast<std::uint64_t>(dist[x]);
    for (const NodeId y : g.neighbors(x)) {
      if (dist[y] == kUnreached) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return {queue.size(), total};
}

double closeness_value(std::size_t n, std::size_t reachable, std::uint64_t total) {
  if (reachable <= 1 || total == 0 || n <= 1) return 0.0;
  const double r1 = static_cast<double>(reachable - 1);
  return (r1 / static_cast<double>(total)) * (r1 / static_cast<double>(n - 1));
}

std::size_t sorted_intersection_size(std::span<const NodeId> a, std::span<const NodeId> b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

double square_clustering_at(const Graph& g, NodeId v) {
  const auto nbrs = g.neighbors(v);
  double squares_total = 0.0;
  double potential = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
      const NodeId u = nbrs[i];
      const NodeId w = nbrs[j];
      // v itself is a common neighbor of u and w.
      const auto squares =
          static_cast<double>(sorted_intersection_size(g.neighbors(u), g.neighbors(w)) - 1);
      squares_total += squares;
      double shared = squares + 1.0;
      if (g.has_edge(u, w)) shared += 1.0;
      potential += (static_cast<double>(g.degree(u)) - shared) +
                   (static_cast<double>(g.degree(w)) - shared) + squares;
    }
  }
  return potential > 0.0 ? squares_total / potential : 0.0;
}

}  // namespace

std::string_view statistic_name(Statistic s) noexcept { return kNames[static_cast<std::size_t>(s)]; }

std::optional<Statistic> statistic_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Statistic>(i);
  }
  return std::nullopt;
}

const std::vector<double>& StructuralProfile::values(Statistic s) const {
  switch (s) {
    case Statistic::kDegree: return degree;
    case Statistic::kBetweenness: return betweenness;
    case Statistic::kCloseness: return closeness;
    case Statistic::kClustering: return clustering;
    case Statistic::kSquareClustering: return square_clustering;
  }
  throw ValidationError("unknown statistic");
}

std::vector<double> compute_degree(const Graph& g) {
  std::vector<double> out(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) out[v] = static_cast<double>(g.degree(v));
  return out;
}

std::vector<double> serial::compute_betweenness(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> bc(n, 0.0);
  BrandesScratch scratch(n);
  std::vector<double> delta(n);
  for (NodeId s = 0; s < n; ++s) {
    brandes_source(g, s, scratch, delta.data());
    for (std::size_t w = 0; w < n; ++w) bc[w] += delta[w];
  }
  for (double& x : bc) x /= 2.0;
  return bc;
}

std::vector<double> compute_betweenness(const Graph& g) {
  const std::size_t n = g.num_nodes();
  constexpr std::size_t kBlock = 64;
  std::vector<double> bc(n, 0.0);
  std::vector<double> block(kBlock * n);
  for (std::size_t base = 0; base < n; base += kBlock) {
    const std::size_t count = std::min(kBlock, n - base);
#pragma omp parallel
    {
      BrandesScratch scratch(n);
#pragma omp for schedule(dynamic, 1)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
        brandes_source(g, static_cast<NodeId>(base + static_cast<std::size_t>(i)), scratch,
                       block.data() + static_cast<std::size_t>(i) * n);
      }
    }
    // Reduce in source order to match the serial summation exactly.
    for (std::size_t i = 0; i < count; ++i) {
      const double* row = block.data() + i * n;
      for (std::size_t w = 0; w < n; ++w) bc[w] += row[w];
    }
  }
  for (double& x : bc) x /= 2.0;
  return bc;
}

std::vector<double> serial::compute_closeness(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> out(n, 0.0);
  std::vector<std::int64_t> dist(n);
  std::vector<NodeId> queue;
  queue.reserve(n);
  for (NodeId v = 0; v < n; ++v) {
    const auto [reachable, total] = bfs_distance_sum(g, v, dist, queue);
    out[v] = closeness_value(n, reachable, total);
  }
  return out;
}

std::vector<double> compute_closeness(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> out(n, 0.0);
#pragma omp parallel
  {
    std::vector<std::int64_t> dist(n);
    std::vector<NodeId> queue;
    queue.reserve(n);
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      const auto v = static_cast<NodeId>(i);
      const auto [reachable, total] = bfs_distance_sum(g, v, dist, queue);
      out[v] = closeness_value(n, reachable, total);
    }
  }
  return out;
}

std::vector<double> compute_clustering(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> out(n, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto v = static_cast<NodeId>(i);
    const std::size_t k = g.degree(v);
    if (k < 2) continue;
    std::size_t twice_triangles = 0;
    for (const NodeId u : g.neighbors(v)) {
      twice_triangles += sorted_intersection_size(g.neighbors(v), g.neighbors(u));
    }
    out[v] = static_cast<double>(twice_triangles) / static_cast<double>(k * (k - 1));
  }
  return out;
}

std::vector<double> serial::compute_square_clustering(const Graph& g) {
  std::vector<double> out(g.num_nodes(), 0.0);
  for (NodeId v = 0; v < g.num_nodes(); ++v) out[v] = square_clustering_at(g, v);
  return out;
}

std::vector<double> compute_square_clustering(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> out(n, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    out[static_cast<std::size_t>(i)] = square_clustering_at(g, static_cast<NodeId>(i));
  }
  return out;
}

StructuralProfile compute_profile(const Graph& g) {
  StructuralProfile p;
  p.degree = compute_degree(g);
  p.betweenness = compute_betweenness(g);
  p.closeness = compute_closeness(g);
  p.clustering = compute_clustering(g);
  p.square_clustering = compute_square_clustering(g);
  return p;
}

std::vector<std::size_t> competition_rank(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<std::size_t> rank(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t v = order[pos];
    if (pos > 0 && values[order[pos - 1]] == values[v]) {
      rank[v] = rank[order[pos - 1]];
    } else {
      rank[v] = pos + 1;
    }
  }
  return rank;
}

RankedProfile rank_profile(const StructuralProfile& profile) {
  RankedProfile ranked;
  ranked.values = profile;
  for (const Statistic s : kAllStatistics) {
    ranked.ranks[static_cast<std::size_t>(s)] = competition_rank(profile.values(s));
  }
  return ranked;
}

std::string verbalize_topology(NodeId v, const RankedProfile& ranked, const Graph& g) {
  const auto& meta = g.meta();
  const std::size_t n = g.num_nodes();
  std::string out = fmt::format(
      "Given a node from a {} graph, where the node type is {} with {} nodes, and the edge type "
      "is {} with {} edges.",
      meta.graph_type, meta.node_type, n, meta.edge_type, g.num_edges());
  for (const Statistic s : kAllStatistics) {
    const double value = ranked.values.values(s).at(v);
    const std::string value_text = s == Statistic::kDegree
                                       ? fmt::format("{}", static_cast<std::uint64_t>(value))
                                       : fmt::format("{:.4f}", value);
    out += fmt::format(" The value of property \"{}\" is {}, ranked at {} among {} nodes.",
                       statistic_name(s), value_text, ranked.rank(s, v), n);
  }
  return out;
}

std::vector<ParsedProperty> parse_topology(std::string_view summary) {
  static const std::regex kSentence(
      R"re(The value of property "([^"]+)" is (-?[0-9]+(?:\.[0-9]+)?), ranked at ([0-9]+) among ([0-9]+) nodes\.)re");
  std::vector<ParsedProperty> out;
  const std::string text(summary);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kSentence);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const auto stat = statistic_from_name(m[1].str());
    if (!stat) throw ValidationError(fmt::format("unknown property '{}'", m[1].str()));
    out.push_back(ParsedProperty{*stat, m[2].str(), std::stod(m[2].str()),
                                 std::stoul(m[3].str()), std::stoul(m[4].str())});
  }
  return out;
}

}  // namespace das
