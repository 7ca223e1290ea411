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
#include <vector>

#include <Eigen/Dense>

#include "das/graph.hpp"

namespace das {

/// layers[l] is the ascending multiset of degrees of nodes at exactly hop
/// distance l from the node; layers[0] holds the node's own degree.
struct StructuralSignature {
  std::vector<std::vector<std::uint32_t>> layers;
  friend bool operator==(const StructuralSignature&, const StructuralSignature&) = default;
};

struct StructuralEmbedding {
  Eigen::MatrixXd coords;  // num_nodes x dim, row v is s_v
  std::size_t dim = 0;
  std::size_t max_hops = 0;
  std::uint64_t seed = 0;

  Eigen::VectorXd row(NodeId v) const { return coords.row(v).transpose(); }
  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(coords.rows()); }
};

std::vector<StructuralSignature> build_signatures(const Graph& g, std::size_t max_hops);

/// Element cost used by the layer alignment: (max+1)/(min+1) - 1 on degrees.
double degree_cost(std::uint32_t x, std::uint32_t y) noexcept;

/// Dynamic time warping between two sequences after padding the shorter one
/// by repeating its last element. Two empty sequences cost 0; an empty
/// sequence is otherwise treated as the single sentinel degree 0.
double dtw_distance(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

/// Sum over layers of DTW cost weighted by 1/(l+1).
double signature_distance(const StructuralSignature& a, const StructuralSignature& b);

/// Symmetric pairwise signature distances (OpenMP over rows).
Eigen::MatrixXd signature_distance_matrix(const std::vector<StructuralSignature>& sigs);

/// Classical MDS coordinates from a distance matrix. Axes with non-positive
/// eigenvalues are zero; each axis is sign-fixed so its first nonzero
/// coordinate is positive.
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, std::size_t dim);

StructuralEmbedding embed_structural(const Graph& g, std::size_t dim = 16,
                                     std::size_t max_hops = 2, std::uint64_t seed = 0);

/// Writes `<stem>.txt` (one row per node) and `<stem>.json` (header).
void write_structural_embedding(const StructuralEmbedding& emb, const std::filesystem::path& stem);
StructuralEmbedding read_structural_embedding(const std::filesystem::path& stem);

namespace serial {
Eigen::MatrixXd signature_distance_matrix(const std::vector<StructuralSignature>& sigs);
}  // namespace serial

}  // namespace das
