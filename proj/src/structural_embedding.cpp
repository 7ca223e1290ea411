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
#include "das/structural_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "das/error.hpp"

namespace das {
namespace {

std::vector<std::uint32_t> padded(const std::vector<std::uint32_t>& seq, std::size_t length) {
  std::vector<std::uint32_t> out = seq.empty() ? std::vector<std::uint32_t>{0} : seq;
  out.resize(std::max(length, out.size()), out.back());
  return out;
}

}  // namespace

std::vector<StructuralSignature> build_signatures(const Graph& g, std::size_t max_hops) {
  if (max_hops < 1) throw ValidationError("max_hops must be >= 1");
  const std::size_t n = g.num_nodes();
  std::vector<StructuralSignature> out(n);
#pragma omp parallel
  {
    std::vector<std::int64_t> dist(n, -1);
    std::vector<NodeId> queue;
    queue.reserve(n);
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      const auto v = static_cast<NodeId>(i);
      auto& layers = out[v].layers;
      layers.assign(max_hops + 1, {});
      queue.clear();
      queue.push_back(v);
      dist[v] = 0;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId x = queue[head];
        const auto d = static_cast<std::size_t>(dist[x]);
        layers[d].push_back(static_cast<std::uint32_t>(g.degree(x)));
        if (d == max_hops) continue;
        for (const NodeId y : g.neighbors(x)) {
          if (dist[y] < 0) {
            dist[y] = dist[x] + 1;
            queue.push_back(y);
          }
        }
      }
      for (const NodeId x : queue) dist[x] = -1;
      for (auto& layer : layers) std::sort(layer.begin(), layer.end());
    }
  }
  return out;
}

double degree_cost(std::uint32_t x, std::uint32_t y) noexcept {
  const double hi = static_cast<double>(std::max(x, y)) + 1.0;
  const double lo = static_cast<double>(std::min(x, y)) + 1.0;
  return hi / lo - 1.0;
}

double dtw_distance(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  const std::size_t len = std::max({a.size(), b.size(), std::size_t{1}});
  const auto x = padded(a, len);
  const auto y = padded(b, len);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(len + 1, kInf);
  std::vector<double> cur(len + 1, kInf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= len; ++i) {
    cur[0] = kInf;
    for (std::size_t j = 1; j <= len; ++j) {
      cur[j] = degree_cost(x[i - 1], y[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[len];
}

double signature_distance(const StructuralSignature& a, const StructuralSignature& b) {
  if (a.layers.size() != b.layers.size()) {
    throw ValidationError("signatures built with different max_hops");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    total += dtw_distance(a.layers[l], b.layers[l]) / static_cast<double>(l + 1);
  }
  return total;
}

Eigen::MatrixXd serial::signature_distance_matrix(const std::vector<StructuralSignature>& sigs) {
  const auto n = static_cast<Eigen::Index>(sigs.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = signature_distance(sigs[i], sigs[j]);
    }
  }
  return d;
}

Eigen::MatrixXd signature_distance_matrix(const std::vector<StructuralSignature>& sigs) {
  const auto n = static_cast<Eigen::Index>(sigs.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  // Each task writes only its own upper-triangle row; mirrored afterwards.
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = signature_distance(sigs[i], sigs[j]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d(j, i) = d(i, j);
  }
  return d;
}

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, std::size_t dim) {
  const Eigen::Index n = distances.rows();
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(dim));
  if (n == 0) return coords;
  const Eigen::MatrixXd sq = distances.array().square().matrix();
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const Eigen::RowVectorXd col_mean = sq.colwise().mean();
  const double grand = sq.mean();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(i, j) = -0.5 * (sq(i, j) - row_mean(i) - col_mean(j) + grand);
    }
  }
  gram = 0.5 * (gram + gram.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw ValidationError("MDS eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = std::max(evals.cwiseAbs().maxCoeff(), 1.0);
  const double floor = 1e-10 * top;
  const Eigen::Index axes = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < axes; ++k) {
    const Eigen::Index src = n - 1 - k;
    const double lambda = evals(src);
    if (lambda <= floor) break;
    Eigen::VectorXd axis = solver.eigenvectors().col(src) * std::sqrt(lambda);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(axis(i)) > 1e-12) {
        if (axis(i) < 0) axis = -axis;
        break;
      }
    }
    coords.col(k) = axis;
  }
  return coords;
}

StructuralEmbedding embed_structural(const Graph& g, std::size_t dim, std::size_t max_hops,
                                     std::uint64_t seed) {
  const auto sigs = build_signatures(g, max_hops);
  StructuralEmbedding emb;
  emb.coords = classical_mds(signature_distance_matrix(sigs), dim);
  emb.dim = dim;
  emb.max_hops = max_hops;
  emb.seed = seed;
  return emb;
}

void write_structural_embedding(const StructuralEmbedding& emb, const std::filesystem::path& stem) {
  auto txt = stem;
  txt += ".txt";
  auto hdr = stem;
  hdr += ".json";
  std::ofstream out(txt);
  if (!out) throw IoError(fmt::format("cannot write '{}'", txt.string()));
  for (Eigen::Index i = 0; i < emb.coords.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.coords.cols(); ++j) {
      if (j > 0) out << ' ';
      out << fmt::format("{:.17g}", emb.coords(i, j));
    }
    out << '\n';
  }
  std::ofstream header(hdr);
  if (!header) throw IoError(fmt::format("cannot write '{}'", hdr.string()));
  header << nlohmann::json{{"dim", emb.dim},
                           {"max_hops", emb.max_hops},
                           {"seed", emb.seed},
                           {"num_nodes", emb.coords.rows()}}
                .dump(2)
         << '\n';
}

StructuralEmbedding read_structural_embedding(const std::filesystem::path& stem) {
  auto txt = stem;
  txt += ".txt";
  auto hdr = stem;
  hdr += ".json";
  std::ifstream header(hdr);
  if (!header) throw IoError(fmt::format("cannot open '{}'", hdr.string()));
  StructuralEmbedding emb;
  std::size_t n = 0;
  try {
    const auto j = nlohmann::json::parse(header);
    emb.dim = j.at("dim").get<std::size_t>();
    emb.max_hops = j.at("max_hops").get<std::size_t>();
    emb.seed = j.at("seed").get<std::uint64_t>();
    n = j.at("num_nodes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(hdr.string(), 0, e.what());
  }
  std::ifstream in(txt);
  if (!in) throw IoError(fmt::format("cannot open '{}'", txt.string()));
  emb.coords.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(emb.dim));
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw ParseError(txt.string(), i + 1, "missing row");
    std::istringstream row(line);
    for (std::size_t j = 0; j < emb.dim; ++j) {
      if (!(row >> emb.coords(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))) {
        throw ParseError(txt.string(), i + 1, "row has too few values");
      }
    }
  }
  return emb;
}

}  // namespace das
