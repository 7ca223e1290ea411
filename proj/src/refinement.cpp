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
#include "das/refinement.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "das/error.hpp"

namespace das {
namespace {

constexpr std::string_view kNotAvailable = "N/A";

std::string original_text(const PromptContext& context, NodeId v) {
  if (context.annotations && context.annotations->has_texts()) {
    if (const auto& t = context.annotations->raw_texts.at(v)) return *t;
  }
  return std::string(kNotAvailable);
}

bool is_train(const PromptContext& context, NodeId v) {
  return v < context.train_mask.size() && context.train_mask[v];
}

std::string correctness_text(const std::optional<bool>& correct) {
  if (!correct) return "unlabeled";
  return *correct ? "correct" : "incorrect";
}

double squared_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm();
}

// Resolves a slash-separated path such as "choices/0/message/content".
const nlohmann::json* resolve_path(const nlohmann::json& root, const std::string& path) {
  const nlohmann::json* cur = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto end = path.find('/', start);
    const std::string key = path.substr(start, end == std::string::npos ? std::string::npos
                                                                          : end - start);
    if (!key.empty()) {
      if (cur->is_array()) {
        char* tail = nullptr;
        const auto idx = std::strtoul(key.c_str(), &tail, 10);
        if (*tail != '\0' || idx >= cur->size()) return nullptr;
        cur = &(*cur)[idx];
      } else if (cur->is_object() && cur->contains(key)) {
        cur = &(*cur)[key];
      } else {
        return nullptr;
      }
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return cur;
}

}  // namespace

void record_history(std::vector<NodeHistory>& histories, std::size_t iteration,
                    std::span<const std::string> descriptions,
                    std::span<const PredictiveState> predictions,
                    const NodeAnnotations& annotations, const std::vector<bool>& train_mask) {
  const std::size_t n = descriptions.size();
  if (predictions.size() != n) throw ValidationError("history coverage mismatch");
  histories.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    auto& h = histories[v];
    if (!h.empty() && h.back().iteration >= iteration) {
      throw ValidationError(
          fmt::format("history for node {} already has iteration {}", v, h.back().iteration));
    }
    HistoryRecord rec;
    rec.iteration = iteration;
    rec.description = descriptions[v];
    rec.predicted_class = predictions[v].predicted_class;
    rec.top_prob = predictions[v].probabilities.maxCoeff();
    rec.entropy = predictions[v].entropy;
    if (v < train_mask.size() && train_mask[v] && annotations.labels.at(v)) {
      rec.correct = rec.predicted_class == *annotations.labels[v];
    }
    h.push_back(std::move(rec));
  }
}

std::string format_probabilities(const Eigen::VectorXd& p) {
  std::string out;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt::format("{:.4f}", p(i));
  }
  return out;
}

std::string RefinementPrompt::user_text() const {
  std::string out = target_block;
  if (history_block) out += "\n" + *history_block;
  if (examples_block) out += "\n" + *examples_block;
  out += "\n" + instructions_block;
  return out;
}

std::string RefinementPrompt::render() const {
  return "[System]\n" + system_text + "\n\n" + user_text();
}

RefinementPrompt assemble_prompt(const MemoryEntry& target, const ExemplarSet& exemplars,
                                 const NodeHistory& history, const Memory& memory,
                                 const PromptContext& context, bool include_history,
                                 bool include_examples) {
  if (!context.annotations) throw ValidationError("prompt context lacks annotations");
  const auto& ann = *context.annotations;
  const NodeId v = target.node;
  RefinementPrompt p;
  p.system_text = fmt::format(
      "You are rewriting node descriptions to make them clearer and more discriminative for a "
      "graph classifier.\nEach node is from a {}.",
      context.graph_type);
  p.target_block = fmt::format(
      "[Target node]\nOriginal description: {}\nTopological summary: {}\n", original_text(context, v),
      context.topology.at(v));

  if (include_history && !history.empty()) {
    std::string block = "[Target history (most recent first)]\n";
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      block += fmt::format(
          "Iteration {}: GNN prediction = {} ({}); top prob = {:.4f}; entropy = {:.4f}.\n"
          "Description used: {}\n",
          it->iteration, ann.class_name(it->predicted_class), correctness_text(it->correct),
          it->top_prob, it->entropy, it->description);
    }
    p.history_block = std::move(block);
  }

  if (include_examples && !exemplars.members.empty()) {
    std::string block = "[Training examples for reference]\n";
    std::size_t item = 1;
    for (const auto& m : exemplars.members) {
      const NodeId u = m.node;
      const auto& pred = memory.entry(u).predictive;
      const auto& label = ann.labels.at(u);
      const std::string gt = (is_train(context, u) && label) ? ann.class_name(*label) : "unknown";
      block += fmt::format(
          "Example {}:\n  Original: {}\n  Topology: {}\n  GT label: {}; GNN pred: {}; class "
          "probs: {}\n",
          item++, original_text(context, u), context.topology.at(u), gt,
          ann.class_name(pred.predicted_class), format_probabilities(pred.probabilities));
    }
    p.examples_block = std::move(block);
  }

  p.instructions_block =
      "[Rewrite instructions]\nRewrite the target description using only the provided inputs.\n"
      "Output one natural-language paragraph (no bullet points), <200 words.\n";
  return p;
}

RefineOutcome IdentityRefiner::refine(const RefineRequest& request) const {
  return RefineOutcome{std::string(request.current), true, 1, {}};
}

MockDescentRefiner::MockDescentRefiner(const TextEncoder& encoder, std::size_t max_token_moves)
    : encoder_(encoder), max_token_moves_(max_token_moves) {}

RefineOutcome MockDescentRefiner::refine(const RefineRequest& request) const {
  RefineOutcome out{std::string(request.current), true, 1, {}};
  if (request.exemplar_embeddings.empty()) return out;

  Eigen::VectorXd anchor = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(encoder_.dim()));
  for (const auto* e : request.exemplar_embeddings) anchor += *e;
  anchor /= static_cast<double>(request.exemplar_embeddings.size());

  std::set<std::string> vocabulary;
  for (const auto desc : request.exemplar_descriptions) {
    for (auto& tok : tokenize(desc)) vocabulary.insert(std::move(tok));
  }
  if (vocabulary.empty()) return out;

  const Eigen::VectorXd start = encoder_.encode(out.text);
  const double start_dist = squared_distance(start, anchor);
  double best_dist = start_dist;
  const auto* hashed = dynamic_cast<const HashEncoder*>(&encoder_);

  if (hashed) {
    // Exact bag-of-buckets bookkeeping: appending a token bumps one count.
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(anchor.size());
    for (const auto& tok : tokenize(out.text)) {
      counts(static_cast<Eigen::Index>(hashed->bucket(tok))) += 1.0;
    }
    double norm2 = counts.squaredNorm();
    double dot = counts.dot(anchor);
    const double anchor2 = anchor.squaredNorm();
    for (std::size_t move = 0; move < max_token_moves_; ++move) {
      const std::string* pick = nullptr;
      double pick_dist = best_dist;
      for (const auto& tok : vocabulary) {
        const auto b = static_cast<Eigen::Index>(hashed->bucket(tok));
        const double n2 = norm2 + 2.0 * counts(b) + 1.0;
        const double d2 = 1.0 - 2.0 * (dot + anchor(b)) / std::sqrt(n2) + anchor2;
        if (d2 < pick_dist) {
          pick_dist = d2;
          pick = &tok;
        }
      }
      if (!pick || !(pick_dist < best_dist - 1e-15)) break;
      const auto b = static_cast<Eigen::Index>(hashed->bucket(*pick));
      norm2 += 2.0 * counts(b) + 1.0;
      dot += anchor(b);
      counts(b) += 1.0;
      best_dist = pick_dist;
      out.text += ' ';
      out.text += *pick;
    }
  } else {
    for (std::size_t move = 0; move < max_token_moves_; ++move) {
      std::string best_text;
      double pick_dist = best_dist;
      for (const auto& tok : vocabulary) {
        std::string candidate = out.text + ' ' + tok;
        const double d2 = squared_distance(encoder_.encode(candidate), anchor);
        if (d2 < pick_dist) {
          pick_dist = d2;
          best_text = std::move(candidate);
        }
      }
      if (best_text.empty() || !(pick_dist < best_dist)) break;
      best_dist = pick_dist;
      out.text = std::move(best_text);
    }
  }
  // Guard against rounding in the incremental bookkeeping.
  if (out.text != request.current &&
      squared_distance(encoder_.encode(out.text), anchor) > start_dist) {
    out.text = std::string(request.current);
  }
  return out;
}

LlmConfig llm_config_from_env(LlmConfig base) {
  if (const char* ep = std::getenv("DAS_LLM_ENDPOINT"); ep && *ep) base.endpoint = ep;
  if (const char* key = std::getenv("DAS_LLM_API_KEY"); key && *key) base.api_key = key;
  return base;
}

LlmRefiner::LlmRefiner(LlmConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ValidationError("LLM refiner requires an endpoint");
  endpoint_ = parse_endpoint(config_.endpoint);
}

RefineOutcome LlmRefiner::refine(const RefineRequest& request) const {
  if (!request.prompt) throw ValidationError("LLM refinement needs a prompt");
  const nlohmann::json body = {
      {"model", config_.model_name},
      {"temperature", config_.temperature},
      {"messages",
       {{{"role", "system"}, {"content", request.prompt->system_text}},
        {{"role", "user"}, {"content", request.prompt->user_text()}}}}};
  std::map<std::string, std::string> headers;
  if (config_.api_key) headers["Authorization"] = "Bearer " + *config_.api_key;

  RefineOutcome out;
  out.attempts = 0;
  std::string last_error;
  const std::string payload = body.dump();
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto wait = std::chrono::milliseconds(
          static_cast<std::int64_t>(config_.backoff_ms) << std::min<std::size_t>(attempt - 1, 10));
      std::this_thread::sleep_for(wait);
    }
    ++out.attempts;
    const auto res =
        post_json(endpoint_, payload, headers, std::chrono::milliseconds(config_.timeout_ms));
    if (res.status == 0) {
      last_error = fmt::format("transport failure: {}", res.transport_error);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      last_error = fmt::format("HTTP {}", res.status);
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(res.body);
      const auto* field = resolve_path(j, config_.response_path);
      if (!field || !field->is_string()) {
        last_error = fmt::format("response lacks a string at '{}'", config_.response_path);
        continue;
      }
      bool truncated = false;
      std::string text = postprocess_completion(field->get<std::string>(), config_.max_words,
                                                &truncated);
      if (truncated) {
        spdlog::warn("node {}: completion exceeded {} words and was truncated", request.node,
                     config_.max_words);
      }
      if (text.empty()) {
        last_error = "empty completion";
        continue;
      }
      out.text = std::move(text);
      out.ok = true;
      return out;
    } catch (const nlohmann::json::exception& e) {
      last_error = fmt::format("malformed response: {}", e.what());
    }
  }
  out.ok = false;
  out.text = std::string(request.current);
  out.error = fmt::format("node {}: {} after {} attempt(s)", request.node, last_error,
                          out.attempts);
  return out;
}

std::string postprocess_completion(std::string_view raw, std::size_t max_words, bool* truncated) {
  std::string cleaned;
  std::istringstream lines{std::string(raw)};
  std::string line;
  while (std::getline(lines, line)) {
    std::string_view l = line;
    while (!l.empty() && std::isspace(static_cast<unsigned char>(l.front()))) l.remove_prefix(1);
    if (l.rfind("```", 0) == 0) continue;
    while (!l.empty() && (l.front() == '#' || l.front() == '>' || l.front() == '*' ||
                          l.front() == '-' || l.front() == '+')) {
      l.remove_prefix(1);
      while (!l.empty() && l.front() == ' ') l.remove_prefix(1);
    }
    cleaned += ' ';
    cleaned += l;
  }
  std::string no_emphasis;
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    if ((cleaned[i] == '*' || cleaned[i] == '_') && i + 1 < cleaned.size() &&
        cleaned[i + 1] == cleaned[i]) {
      ++i;
      continue;
    }
    if (cleaned[i] == '`') continue;
    no_emphasis += cleaned[i];
  }
  std::istringstream words(no_emphasis);
  std::string word;
  std::string out;
  std::size_t count = 0;
  bool cut = false;
  while (words >> word) {
    if (count == max_words) {
      cut = true;
      break;
    }
    if (!out.empty()) out += ' ';
    out += word;
    ++count;
  }
  if (truncated) *truncated = cut;
  return out;
}

std::size_t whitespace_token_count(std::string_view text) noexcept {
  std::size_t count = 0;
  bool in_word = false;
  for (const char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

void CallLedger::append(std::span<const LedgerEntry> entries) {
  const std::lock_guard lock(mutex_);
  entries_.insert(entries_.end(), entries.begin(), entries.end());
}

std::vector<LedgerEntry> CallLedger::entries() const {
  const std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t CallLedger::size() const {
  const std::lock_guard lock(mutex_);
  return entries_.size();
}

void CallLedger::write_jsonl(const std::filesystem::path& path) const {
  const auto snapshot = entries();
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& e : snapshot) {
    out << nlohmann::json{{"node", e.node},
                          {"iteration", e.iteration},
                          {"prompt_tokens", e.prompt_tokens},
                          {"response_tokens", e.response_tokens},
                          {"latency_ms", e.latency_ms},
                          {"status", e.status},
                          {"attempts", e.attempts}}
               .dump()
        << '\n';
  }
}

CallLedger CallLedger::read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<LedgerEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LedgerEntry e;
      e.node = j.at("node").get<NodeId>();
      e.iteration = j.at("iteration").get<std::size_t>();
      e.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
      e.response_tokens = j.at("response_tokens").get<std::size_t>();
      e.latency_ms = j.at("latency_ms").get<double>();
      e.status = j.at("status").get<std::string>();
      e.attempts = j.at("attempts").get<std::size_t>();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(path.string(), lineno, ex.what());
    }
  }
  CallLedger ledger;
  ledger.append(entries);
  return ledger;
}

RefineAllResult refine_all(const Refiner& refiner, const Memory& memory,
                           std::span<const ExemplarSet> exemplar_sets,
                           std::span<const NodeHistory> histories, const PromptContext& context,
                           const RefineOptions& options, std::size_t iteration,
                           CallLedger& ledger) {
  const std::size_t n = memory.size();
  std::vector<NodeId> targets;
  if (options.node_subset) {
    targets = *options.node_subset;
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  } else {
    targets.resize(n);
    for (NodeId v = 0; v < n; ++v) targets[v] = v;
  }
  for (const NodeId v : targets) {
    if (v >= n) throw ValidationError(fmt::format("refinement target {} out of range", v));
    if (v >= exemplar_sets.size() || exemplar_sets[v].target != v) {
      throw ValidationError(fmt::format("no exemplar set for node {}", v));
    }
  }

  RefineAllResult result;
  result.descriptions.reserve(n);
  for (const auto& e : memory.entries()) result.descriptions.push_back(e.description);

  std::vector<RefineOutcome> outcomes(targets.size());
  std::vector<LedgerEntry> entries(targets.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed_hard{false};
  std::string hard_error;
  std::mutex error_mutex;
  const NodeHistory empty_history;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < targets.size(); i = next.fetch_add(1)) {
      const NodeId v = targets[i];
      try {
        const auto& entry = memory.entry(v);
        const auto& set = exemplar_sets[v];
        const auto& history = v < histories.size() ? histories[v] : empty_history;
        const RefinementPrompt prompt =
            assemble_prompt(entry, set, history, memory, context, options.include_history,
                            options.include_examples);
        RefineRequest req;
        req.node = v;
        req.iteration = iteration;
        req.prompt = &prompt;
        req.current = entry.description;
        for (const auto& m : set.members) {
          req.exemplar_embeddings.push_back(&memory.entry(m.node).text_embedding);
          req.exemplar_descriptions.push_back(memory.entry(m.node).description);
        }
        const auto t0 = std::chrono::steady_clock::now();
        outcomes[i] = refiner.refine(req);
        const auto t1 = std::chrono::steady_clock::now();
        entries[i] = LedgerEntry{v,
                                 iteration,
                                 whitespace_token_count(prompt.render()),
                                 whitespace_token_count(outcomes[i].text),
                                 std::chrono::duration<double, std::milli>(t1 - t0).count(),
                                 outcomes[i].ok ? "ok" : "failed",
                                 outcomes[i].attempts};
      } catch (const std::exception& e) {
        const std::lock_guard lock(error_mutex);
        if (!failed_hard.exchange(true)) hard_error = e.what();
      }
    }
  };

  const std::size_t threads =
      std::clamp<std::size_t>(options.concurrency_limit, 1, std::max<std::size_t>(targets.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failed_hard) throw BackendError(fmt::format("refinement aborted: {}", hard_error));

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const NodeId v = targets[i];
    if (outcomes[i].ok) {
      result.descriptions[v] = std::move(outcomes[i].text);
    } else {
      result.failures.push_back(v);
      spdlog::warn("refinement failed, keeping current description: {}", outcomes[i].error);
    }
  }
  ledger.append(entries);
  result.calls = targets.size();
  if (!targets.empty()) {
    const double fraction =
        static_cast<double>(result.failures.size()) / static_cast<double>(targets.size());
    if (fraction > options.max_failure_fraction) {
      throw BackendError(fmt::format("{} of {} refinements failed ({:.1f}% > {:.1f}% allowed)",
                                     result.failures.size(), targets.size(), 100.0 * fraction,
                                     100.0 * options.max_failure_fraction));
    }
  }
  return result;
}

}  // namespace das
