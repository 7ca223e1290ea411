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
#include "das/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "das/error.hpp"

namespace das {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("{}: '{}' is not a number", key, value));
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t x = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError(fmt::format("{}: '{}' is not a nonnegative integer", key, value));
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ValidationError(fmt::format("{}: '{}' is not a boolean", key, value));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace

std::string refiner_kind_name(RefinerKind kind) {
  switch (kind) {
    case RefinerKind::kLlm: return "llm";
    case RefinerKind::kMockDescent: return "mock";
    case RefinerKind::kIdentity: return "identity";
  }
  return "unknown";
}

RefinerKind refiner_kind_from_name(const std::string& name) {
  if (name == "llm") return RefinerKind::kLlm;
  if (name == "mock") return RefinerKind::kMockDescent;
  if (name == "identity") return RefinerKind::kIdentity;
  throw ValidationError(fmt::format("unknown refiner '{}' (llm, mock, identity)", name));
}

void RunConfig::validate() const {
  if (retrieval.alpha < 0.0 || retrieval.alpha > 1.0) {
    throw ValidationError(fmt::format("retrieval.alpha must lie in [0, 1], got {}", retrieval.alpha));
  }
  if (retrieval.tau < 0.0 || retrieval.tau > 1.0) {
    throw ValidationError(fmt::format("retrieval.tau must lie in [0, 1], got {}", retrieval.tau));
  }
  if (retrieval.top_k == 0) throw ValidationError("retrieval.top_k must be positive");
  if (encoder.dim == 0) throw ValidationError("encoder.dim must be positive");
  if (train.num_layers == 0) throw ValidationError("train.layers must be positive");
  if (train.dropout < 0.0 || train.dropout >= 1.0) {
    throw ValidationError("train.dropout must lie in [0, 1)");
  }
  if (train.learning_rate < 0.0) throw ValidationError("train.lr must be >= 0");
  if (refiner.options.concurrency_limit == 0) {
    throw ValidationError("refiner.concurrency must be positive");
  }
  if (loop.seeds.empty()) throw ValidationError("run.seeds needs at least one seed");
  objective.validate();
}

void apply_overrides(RunConfig& c, const ConfigOverrides& overrides,
                     const std::filesystem::path& base) {
  for (const auto& [key, raw] : overrides) {
    const std::string v = trim(raw);
    if (key == "data.edges") c.data.edges = resolve(base, v);
    else if (key == "data.texts") c.data.texts = v.empty() ? std::nullopt : std::optional(resolve(base, v));
    else if (key == "data.labels") c.data.labels = resolve(base, v);
    else if (key == "data.class_names") c.data.class_names = resolve(base, v);
    else if (key == "data.splits") c.data.splits = resolve(base, v);
    else if (key == "data.num_nodes") c.data.min_nodes = to_uint(key, v);
    else if (key == "data.graph_type") c.data.meta.graph_type = v;
    else if (key == "data.node_type") c.data.meta.node_type = v;
    else if (key == "data.edge_type") c.data.meta.edge_type = v;
    else if (key == "data.split_regime") {
      if (v == "low") c.data.split_regime = SplitRegime::kLowLabel;
      else if (v == "high") c.data.split_regime = SplitRegime::kHighLabel;
      else throw ValidationError(fmt::format("data.split_regime: '{}' (low, high)", v));
    }
    else if (key == "data.per_class_train") c.data.per_class_train = to_uint(key, v);
    else if (key == "data.per_class_val") c.data.per_class_val = to_uint(key, v);
    else if (key == "data.split_seed") c.data.split_seed = to_uint(key, v);
    else if (key == "retrieval.alpha") c.retrieval.alpha = to_double(key, v);
    else if (key == "retrieval.top_k") c.retrieval.top_k = to_uint(key, v);
    else if (key == "retrieval.tau") c.retrieval.tau = to_double(key, v);
    else if (key == "retrieval.pool") {
      if (v == "all") c.retrieval.candidate_pool = CandidatePool::kAll;
      else if (v == "train") c.retrieval.candidate_pool = CandidatePool::kTrainOnly;
      else throw ValidationError(fmt::format("retrieval.pool: '{}' (all, train)", v));
    }
    else if (key == "retrieval.require_correct_train") c.retrieval.require_correct_train = to_bool(key, v);
    else if (key == "encoder.kind") {
      if (v == "hash") c.encoder.kind = EncoderKind::kDeterministicHash;
      else if (v == "remote") c.encoder.kind = EncoderKind::kRemoteService;
      else throw ValidationError(fmt::format("encoder.kind: '{}' (hash, remote)", v));
    }
    else if (key == "encoder.dim") c.encoder.dim = to_uint(key, v);
    else if (key == "encoder.endpoint") c.encoder.endpoint = v;
    else if (key == "encoder.model") c.encoder.model_name = v;
    else if (key == "encoder.batch_size") c.encoder.batch_size = to_uint(key, v);
    else if (key == "encoder.max_in_flight") c.encoder.max_in_flight = to_uint(key, v);
    else if (key == "encoder.timeout_ms") c.encoder.timeout_ms = static_cast<int>(to_uint(key, v));
    else if (key == "refiner.kind") c.refiner.kind = refiner_kind_from_name(v);
    else if (key == "refiner.endpoint") c.refiner.llm.endpoint = v;
    else if (key == "refiner.model") c.refiner.llm.model_name = v;
    else if (key == "refiner.temperature") c.refiner.llm.temperature = to_double(key, v);
    else if (key == "refiner.max_retries") c.refiner.llm.max_retries = to_uint(key, v);
    else if (key == "refiner.timeout_ms") c.refiner.llm.timeout_ms = static_cast<int>(to_uint(key, v));
    else if (key == "refiner.backoff_ms") c.refiner.llm.backoff_ms = static_cast<int>(to_uint(key, v));
    else if (key == "refiner.max_words") c.refiner.llm.max_words = to_uint(key, v);
    else if (key == "refiner.response_path") c.refiner.llm.response_path = v;
    else if (key == "refiner.max_token_moves") c.refiner.max_token_moves = to_uint(key, v);
    else if (key == "refiner.concurrency") c.refiner.options.concurrency_limit = to_uint(key, v);
    else if (key == "refiner.include_history") c.refiner.options.include_history = to_bool(key, v);
    else if (key == "refiner.include_examples") c.refiner.options.include_examples = to_bool(key, v);
    else if (key == "refiner.max_failure_fraction") c.refiner.options.max_failure_fraction = to_double(key, v);
    else if (key == "refiner.nodes") {
      if (v.empty() || v == "all") {
        c.refiner.options.node_subset.reset();
      } else {
        std::vector<NodeId> nodes;
        for (const auto& item : split_list(v)) nodes.push_back(static_cast<NodeId>(to_uint(key, item)));
        c.refiner.options.node_subset = std::move(nodes);
      }
    }
    else if (key == "train.backbone") {
      if (v == "gcn") c.train.backbone = Backbone::kGcn;
      else if (v == "mlp") c.train.backbone = Backbone::kMlp;
      else throw ValidationError(fmt::format("train.backbone: '{}' (gcn, mlp)", v));
    }
    else if (key == "train.hidden") c.train.hidden_dim = to_uint(key, v);
    else if (key == "train.layers") c.train.num_layers = to_uint(key, v);
    else if (key == "train.lr") c.train.learning_rate = to_double(key, v);
    else if (key == "train.weight_decay") c.train.weight_decay = to_double(key, v);
    else if (key == "train.dropout") c.train.dropout = to_double(key, v);
    else if (key == "train.epochs") c.train.max_epochs = to_uint(key, v);
    else if (key == "train.seed") c.train.seed = to_uint(key, v);
    else if (key == "train.warm_start") c.train.warm_start = to_bool(key, v);
    else if (key == "objective.lambda") c.objective.lambda = to_double(key, v);
    else if (key == "objective.max_support") c.objective.max_support = to_uint(key, v);
    else if (key == "objective.subset_budget") c.objective.subset_budget = to_uint(key, v);
    else if (key == "run.iterations") c.loop.iterations = to_uint(key, v);
    else if (key == "run.structural_dim") c.loop.structural_dim = to_uint(key, v);
    else if (key == "run.structural_hops") c.loop.structural_hops = to_uint(key, v);
    else if (key == "run.descent_guard") c.loop.descent_guard = to_bool(key, v);
    else if (key == "run.refinement_guard") c.loop.refinement_guard = to_bool(key, v);
    else if (key == "run.reuse_final_model") c.loop.reuse_final_model = to_bool(key, v);
    else if (key == "run.out_dir") c.loop.out_dir = resolve(base, v);
    else if (key == "run.seeds") {
      c.loop.seeds.clear();
      for (const auto& item : split_list(v)) c.loop.seeds.push_back(to_uint(key, item));
    }
    else throw ValidationError(fmt::format("unknown configuration key '{}'", key));
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(path.string(), e.line(), e.message());
  }
  ConfigOverrides flat;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ValidationError(fmt::format("{}: key '{}' is outside any section", path.string(), section));
    }
    for (const auto& [key, value] : body) flat[section + "." + key] = value.data();
  }
  RunConfig config;
  apply_overrides(config, flat, path.parent_path());
  return config;
}

}  // namespace das
