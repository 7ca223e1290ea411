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

#include <cstddef>
#include <cstdint>

#include "das/graph.hpp"

namespace das {

struct AirportLikeOptions {
  std::size_t num_nodes = 131;
  std::size_t num_edges = 2137;
  std::size_t per_class_train = 10;
  std::size_t per_class_val = 20;
};

/// Text-free graph with hub-heavy degrees; labels are degree quartiles.
Dataset make_airport_like(std::uint64_t seed, const AirportLikeOptions& options = {});

struct CitationLikeOptions {
  std::size_t num_nodes = 120;
  std::size_t num_classes = 4;
  std::size_t words_per_text = 14;
  double topic_fraction = 0.55;   // words drawn from the node's class vocabulary
  double confuser_fraction = 0.1; // words drawn from another class
  std::size_t edges_per_node = 2;
  double homophily = 0.8;
  std::size_t per_class_train = 5;
  std::size_t per_class_val = 5;
};

/// Text-attributed graph with class-conditional vocabularies and
/// homophilous edges.
Dataset make_citation_like(std::uint64_t seed, const CitationLikeOptions& options = {});

/// 30 text-attributed nodes in 3 classes with 3 train and 3 validation
/// nodes per class; small enough for exact regularizer enumeration.
Dataset make_descent_fixture(std::uint64_t seed);

}  // namespace das
