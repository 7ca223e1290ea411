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
#include <string>
#include <vector>

#include "das/gnn.hpp"
#include "das/graph.hpp"
#include "das/memory.hpp"
#include "das/refinement.hpp"
#include "das/surrogate.hpp"
#include "das/text_encoder.hpp"

namespace das {

enum class RefinerKind { kLlm, kMockDescent, kIdentity };

struct DataConfig {
  std::filesystem::path edges;
  std::optional<std::filesystem::path> texts;  // absent: text-free regime
  std::filesystem::path labels;
  std::optional<std::filesystem::path> class_names;
  std::optional<std::filesystem::path> splits;  // generated when absent
  std::size_t min_nodes = 0;  // admits trailing isolated nodes
  GraphMeta meta;
  SplitRegime split_regime = SplitRegime::kLowLabel;
  std::size_t per_class_train = 20;
  std::size_t per_class_val = 30;
  std::uint64_t split_seed = 0;
};

struct RefinerConfig {
  RefinerKind kind = RefinerKind::kMockDescent;
  LlmConfig llm;
  std::size_t max_token_moves = 8;
  RefineOptions options;
};

struct LoopConfig {
  std::size_t iterations = 3;  // 0: train once on the initial descriptions
  std::size_t structural_dim = 16;
  std::size_t structural_hops = 2;
  bool descent_guard = true;
  bool refinement_guard = true;
  bool reuse_final_model = false;  // skip the separate final training
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = "das_run";
};

struct RunConfig {
  DataConfig data;
  RetrievalConfig retrieval;
  EncoderBackend encoder;
  RefinerConfig refiner;
  TrainConfig train;
  ObjectiveConfig objective;
  LoopConfig loop;

  void validate() const;
};

/// Flat key/value overrides, keyed `section.key` (e.g. "retrieval.alpha").
using ConfigOverrides = std::map<std::string, std::string>;

/// Reads INI-style sections (data, retrieval, encoder, refiner, train,
/// objective, run); relative paths resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies `section.key` assignments; unknown keys raise ValidationError.
void apply_overrides(RunConfig& config, const ConfigOverrides& overrides,
                     const std::filesystem::path& base_dir = {});

std::string refiner_kind_name(RefinerKind kind);
RefinerKind refiner_kind_from_name(const std::string& name);

}  // namespace das
