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
#include "das/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "das/error.hpp"
#include "das/memory.hpp"
#include "das/random.hpp"

namespace das {
namespace fs = std::filesystem;
namespace {

void write_descriptions(std::span<const std::string> descriptions, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (NodeId v = 0; v < descriptions.size(); ++v) {
    out << nlohmann::json{{"node", v}, {"description", descriptions[v]}}.dump() << '\n';
  }
}

std::vector<std::string> read_descriptions(const fs::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.at("node").get<NodeId>() != out.size()) {
        throw ParseError(path.string(), lineno, "descriptions out of node order");
      }
      out.push_back(j.at("description").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  if (out.size() != n) {
    throw ValidationError(fmt::format("{} holds {} descriptions, expected {}", path.string(),
                                      out.size(), n));
  }
  return out;
}

void write_history(std::span<const NodeHistory> histories, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (NodeId v = 0; v < histories.size(); ++v) {
    for (const auto& r : histories[v]) {
      nlohmann::json j = {{"node", v},
                          {"iteration", r.iteration},
                          {"description", r.description},
                          {"predicted_class", r.predicted_class},
                          {"correct", nullptr},
                          {"top_prob", r.top_prob},
                          {"entropy", r.entropy}};
      if (r.correct) j["correct"] = *r.correct;
      out << j.dump() << '\n';
    }
  }
}

std::vector<NodeHistory> read_history(const fs::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<NodeHistory> out(n);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto v = j.at("node").get<NodeId>();
      if (v >= n) throw ParseError(path.string(), lineno, "node out of range");
      HistoryRecord r;
      r.iteration = j.at("iteration").get<std::size_t>();
      r.description = j.at("description").get<std::string>();
      r.predicted_class = j.at("predicted_class").get<std::size_t>();
      if (!j.at("correct").is_null()) r.correct = j.at("correct").get<bool>();
      r.top_prob = j.at("top_prob").get<double>();
      r.entropy = j.at("entropy").get<double>();
      out[v].push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

nlohmann::json accuracy_json(const SplitAccuracy& a) {
  return {{"train", a.train}, {"validation", a.validation}, {"test", a.test}};
}

SplitAccuracy accuracy_from(const nlohmann::json& j) {
  return {j.at("train").get<double>(), j.at("validation").get<double>(),
          j.at("test").get<double>()};
}

fs::path iteration_dir(const fs::path& out, std::size_t t) {
  return out / "checkpoints" / fmt::format("iter_{}", t);
}

// Everything the loop state needs at one iteration, kept together so the
// final round can reuse it for fallback anchors.
struct Round {
  std::vector<TextEmbedding> embeddings;
  Features features;
};

Round encode_round(const TextEncoder& encoder, std::span<const std::string> descriptions) {
  Round r;
  r.embeddings = encoder.encode_batch(descriptions);
  r.features = stack_features(r.embeddings);
  return r;
}

class Loop {
 public:
  Loop(const Dataset& data, const RunConfig& config, const TextEncoder& encoder,
       const Refiner& refiner)
      : data_(data), config_(config), encoder_(encoder), refiner_(refiner) {
    config_.validate();
    const std::size_t n = data.graph.num_nodes();
    if (data.annotations.labels.size() != n) {
      throw ValidationError("annotations do not cover every node");
    }
    train_mask_ = data.splits.train_mask(n);
    prepared_ = prepare_graph(data.graph, config.loop, config.train.seed);
    prompt_context_ = PromptContext{data.graph.meta().graph_type, &data.annotations,
                                    prepared_.topology, train_mask_};
    retrieval_context_ = RetrievalContext{&data.annotations, train_mask_};
    supervised_ = SupervisedContext{&prepared_.propagation, &data.annotations, data.splits.train};
  }

  RunReport run(const RunOptions& options) {
    const std::size_t n = data_.graph.num_nodes();
    const std::size_t T = config_.loop.iterations;
    RunReport report;
    report.seed = config_.train.seed;
    report.iterations = T;
    report.trace.lambda = config_.objective.lambda;
    report.initial_descriptions =
        initialize_descriptions(data_.graph, data_.annotations, prepared_.ranked);
    report.refined_per_iteration = n;
    if (const auto& subset = config_.refiner.options.node_subset) {
      // refine_all visits each distinct id once.
      const std::set<NodeId> distinct(subset->begin(), subset->end());
      report.refined_per_iteration = distinct.size();
    }

    std::vector<std::string> descriptions = report.initial_descriptions;
    std::vector<NodeHistory> histories(n);
    std::optional<ModelParams> previous;
    std::size_t start = 0;

    if (options.resume_after) {
      if (!options.out_dir) throw ValidationError("resuming needs an output directory");
      const std::size_t r = *options.resume_after;
      if (r >= T) throw ValidationError(fmt::format("no iteration {} in a {}-iteration run", r, T));
      const fs::path ckpt = iteration_dir(*options.out_dir, r);
      report.trace = ObjectiveTrace::read_json(ckpt / "trace.json");
      if (report.trace.entries.size() != r + 1) {
        throw ValidationError(fmt::format("checkpoint {} has a trace of {} entries", r,
                                          report.trace.entries.size()));
      }
      for (std::size_t t = 0; t <= r; ++t) {
        const fs::path dir = iteration_dir(*options.out_dir, t);
        std::ifstream in(dir / "state.json");
        if (!in) throw IoError(fmt::format("missing checkpoint state in '{}'", dir.string()));
        const auto state = nlohmann::json::parse(in);
        report.iteration_accuracy.push_back(accuracy_from(state.at("accuracy")));
        const auto slice = CallLedger::read_jsonl(dir / "ledger.jsonl").entries();
        report.ledger.append(slice);
      }
      descriptions = read_descriptions(ckpt / "refined.jsonl", n);
      histories = read_history(ckpt / "history.jsonl", n);
      previous = read_model(ckpt / "model.txt");
      start = r + 1;
      spdlog::info("resuming after iteration {}", r);
    } else if (options.out_dir) {
      fs::create_directories(*options.out_dir / "checkpoints");
      write_descriptions(report.initial_descriptions,
                         *options.out_dir / "initial_descriptions.jsonl");
      write_splits(data_.splits, *options.out_dir / "splits.json");
      write_structural_embedding(*prepared_.structural, *options.out_dir / "structural");
    }

    for (std::size_t t = start; t < T; ++t) {
      const Round round = encode_round(encoder_, descriptions);
      auto [params, model_accepted] = train_guarded(round, previous);
      const auto predictions = forward(params, round.features, prepared_.propagation);
      const SplitAccuracy acc = evaluate(predictions, data_.splits, data_.annotations);

      const Memory memory =
          build_memory(descriptions, round.embeddings, prepared_.structural, predictions, t);
      record_history(histories, t, descriptions, predictions, data_.annotations, train_mask_);
      const auto exemplars = retrieve_all(memory, config_.retrieval, retrieval_context_);
      const AnchorSet anchors = anchors_from_exemplars(exemplars, memory);

      TraceEntry entry = trace_entry(t, params, round.embeddings, anchors);
      entry.model_accepted = model_accepted;

      const auto refined = refine_all(refiner_, memory, exemplars, histories, prompt_context_,
                                      config_.refiner.options, t, report.ledger);
      std::vector<std::string> next = refined.descriptions;
      std::vector<TextEmbedding> next_embeddings;
      std::size_t accepted = 0;
      if (config_.loop.refinement_guard) {
        accepted = guard_refinement(params, descriptions, round.embeddings, next, anchors,
                                    entry.J, next_embeddings);
      } else {
        next_embeddings = encoder_.encode_batch(next);
        for (NodeId v = 0; v < n; ++v) accepted += next[v] != descriptions[v] ? 1 : 0;
      }
      entry.refined_accepted = accepted;
      entry.omega_refined = omega(next_embeddings, anchors);
      report.trace.entries.push_back(entry);
      report.iteration_accuracy.push_back(acc);
      spdlog::info("iteration {}: J={:.6f} L={:.6f} accepted {}/{} rewrites, val={:.4f}", t,
                   entry.J, entry.supervised, accepted, refined.calls, acc.validation);

      if (options.out_dir) {
        write_checkpoint(*options.out_dir, t, descriptions, next, memory, exemplars, params,
                         histories, report, acc, refined.failures.size());
      }
      previous = std::move(params);
      descriptions = std::move(next);
    }

    const Round last = encode_round(encoder_, descriptions);
    ModelParams final_params;
    bool final_accepted = true;
    if (config_.loop.reuse_final_model && previous) {
      final_params = *previous;
    } else {
      std::tie(final_params, final_accepted) = train_guarded(last, previous);
    }
    report.final_predictions = forward(final_params, last.features, prepared_.propagation);
    report.accuracy = evaluate(report.final_predictions, data_.splits, data_.annotations);
    // A final memory round supplies anchors for Omega when exact R is out of reach.
    std::optional<AnchorSet> final_anchors;
    if (!exact_R_feasible(n, n, config_.objective)) {
      const Memory memory = build_memory(descriptions, last.embeddings, prepared_.structural,
                                         report.final_predictions, T);
      const auto exemplars = retrieve_all(memory, config_.retrieval, retrieval_context_);
      final_anchors = anchors_from_exemplars(exemplars, memory);
    }
    TraceEntry final_entry =
        trace_entry(T, final_params, last.embeddings, final_anchors ? &*final_anchors : nullptr);
    final_entry.model_accepted = final_accepted;
    report.trace.entries.push_back(final_entry);
    report.final_descriptions = descriptions;
    report.final_model = std::move(final_params);
    spdlog::info("final: J={:.6f} test accuracy {:.4f}", final_entry.J, report.accuracy.test);

    if (options.out_dir) {
      write_descriptions(report.final_descriptions, *options.out_dir / "final_descriptions.jsonl");
      write_model(report.final_model, config_.train, *options.out_dir / "final_model.txt");
      write_run_outputs(report, *options.out_dir);
    }
    return report;
  }

 private:
  double supervised_at(const ModelParams& params, const Features& x) const {
    const auto p = forward(params, x, prepared_.propagation);
    return supervised_loss(p, data_.annotations, data_.splits.train);
  }

  std::pair<ModelParams, bool> train_guarded(const Round& round,
                                             const std::optional<ModelParams>& previous) const {
    const ModelParams* warm = (config_.train.warm_start && previous) ? &*previous : nullptr;
    TrainResult result = train(prepared_.propagation, round.features, data_.annotations,
                               data_.splits, config_.train, warm);
    if (!config_.loop.descent_guard || !previous) return {std::move(result.params), true};
    const double fresh = supervised_at(result.params, round.features);
    const double kept = supervised_at(*previous, round.features);
    if (fresh <= kept) return {std::move(result.params), true};
    spdlog::debug("descent guard kept previous parameters ({} > {})", fresh, kept);
    return {*previous, false};
  }

  // J at the given embeddings; Omega against `anchors` replaces R when exact
  // enumeration is out of budget. `terms` receives the per-node R minima.
  ObjectiveValue objective(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                           const AnchorSet* anchors, std::vector<double>* terms = nullptr) const {
    const auto& cfg = config_.objective;
    ObjectiveValue out;
    out.supervised = supervised_at(params, stack_features(embeddings));
    if (exact_R_feasible(embeddings.size(), embeddings.size(), cfg)) {
      auto r_terms = regularizer_R_terms(embeddings, cfg);
      out.regularizer = 0.0;
      for (const double x : r_terms) out.regularizer += x;
      if (terms) *terms = std::move(r_terms);
    } else {
      if (!anchors) throw ValidationError("exact R is out of budget and no anchors are available");
      out.regularizer = omega(embeddings, *anchors);
      out.exact = false;
    }
    out.value = out.supervised + cfg.lambda * out.regularizer;
    return out;
  }

  TraceEntry trace_entry(std::size_t t, const ModelParams& params,
                         std::span<const TextEmbedding> embeddings, const AnchorSet* anchors) const {
    std::vector<double> terms;
    const ObjectiveValue j = objective(params, embeddings, anchors, &terms);
    TraceEntry e;
    e.iteration = t;
    e.J = j.value;
    e.supervised = j.supervised;
    e.regularizer = j.regularizer;
    e.exact = j.exact;
    if (anchors) {
      e.omega = omega(embeddings, *anchors);
      e.excluded = anchors->excluded;
      e.anchored_nodes = embeddings.size() - anchors->excluded.size();
      if (j.exact) {
        double masked = 0.0;
        for (std::size_t v = 0; v < terms.size(); ++v) {
          if (anchors->anchors[v]) masked += terms[v];
        }
        e.margin = config_.objective.lambda * (*e.omega - masked);
      }
    }
    return e;
  }

  TraceEntry trace_entry(std::size_t t, const ModelParams& params,
                         std::span<const TextEmbedding> embeddings, const AnchorSet& anchors) const {
    return trace_entry(t, params, embeddings, &anchors);
  }

  // Keeps the candidate descriptions only while J(theta_t, .) does not rise:
  // all at once if possible, otherwise node by node in ascending id order.
  std::size_t guard_refinement(const ModelParams& params, std::span<const std::string> current,
                               std::span<const TextEmbedding> current_embeddings,
                               std::vector<std::string>& candidate, const AnchorSet& anchors,
                               double current_J, std::vector<TextEmbedding>& out_embeddings) const {
    std::vector<NodeId> changed;
    for (NodeId v = 0; v < current.size(); ++v) {
      if (candidate[v] != current[v]) changed.push_back(v);
    }
    out_embeddings.assign(current_embeddings.begin(), current_embeddings.end());
    if (changed.empty()) return 0;
    std::vector<std::string> changed_texts;
    for (const NodeId v : changed) changed_texts.push_back(candidate[v]);
    const auto changed_embeddings = encoder_.encode_batch(changed_texts);

    std::vector<TextEmbedding> all = out_embeddings;
    for (std::size_t i = 0; i < changed.size(); ++i) all[changed[i]] = changed_embeddings[i];
    if (objective(params, all, &anchors).value <= current_J) {
      out_embeddings = std::move(all);
      return changed.size();
    }

    std::vector<std::string> kept(current.begin(), current.end());
    double best = current_J;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < changed.size(); ++i) {
      const NodeId v = changed[i];
      TextEmbedding saved = out_embeddings[v];
      out_embeddings[v] = changed_embeddings[i];
      const double value = objective(params, out_embeddings, &anchors).value;
      if (value <= best) {
        best = value;
        kept[v] = candidate[v];
        ++accepted;
      } else {
        out_embeddings[v] = std::move(saved);
      }
    }
    candidate = std::move(kept);
    return accepted;
  }

  void write_checkpoint(const fs::path& out, std::size_t t, std::span<const std::string> current,
                        std::span<const std::string> next, const Memory& memory,
                        std::span<const ExemplarSet> exemplars, const ModelParams& params,
                        std::span<const NodeHistory> histories, const RunReport& report,
                        const SplitAccuracy& acc, std::size_t failures) const {
    const fs::path final_dir = iteration_dir(out, t);
    const fs::path tmp = final_dir.string() + ".partial";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    write_descriptions(current, tmp / "descriptions.jsonl");
    write_descriptions(next, tmp / "refined.jsonl");
    write_memory(memory, tmp / "memory.jsonl", (out / "structural").string());
    write_exemplars(exemplars, tmp / "exemplars.jsonl");
    write_model(params, config_.train, tmp / "model.txt");
    write_history(histories, tmp / "history.jsonl");
    report.trace.write_json(tmp / "trace.json");
    CallLedger slice;
    std::vector<LedgerEntry> mine;
    for (const auto& e : report.ledger.entries()) {
      if (e.iteration == t) mine.push_back(e);
    }
    slice.append(mine);
    slice.write_jsonl(tmp / "ledger.jsonl");
    {
      std::ofstream state(tmp / "state.json");
      state << nlohmann::json{{"iteration", t},
                              {"accuracy", accuracy_json(acc)},
                              {"refinement_failures", failures},
                              {"calls", mine.size()}}
                   .dump(2)
            << '\n';
    }
    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
  }

  const Dataset& data_;
  RunConfig config_;
  const TextEncoder& encoder_;
  const Refiner& refiner_;
  std::vector<bool> train_mask_;
  PreparedGraph prepared_;
  PromptContext prompt_context_;
  RetrievalContext retrieval_context_;
  SupervisedContext supervised_;
};

}  // namespace

Dataset load_dataset(const DataConfig& config) {
  Dataset d;
  d.graph = load_edge_list(config.edges, config.min_nodes, config.meta);
  d.annotations = load_annotations(config.texts, config.labels, d.graph.num_nodes());
  if (config.class_names) load_class_names(d.annotations, *config.class_names);
  if (config.splits) {
    d.splits = read_splits(*config.splits);
  } else {
    d.splits = make_splits(d.annotations, config.split_regime, config.per_class_train,
                           config.per_class_val, config.split_seed);
  }
  return d;
}

std::vector<std::string> initialize_descriptions(const Graph& g,
                                                 const NodeAnnotations& annotations,
                                                 const RankedProfile& ranked) {
  const std::size_t n = g.num_nodes();
  std::vector<std::string> out(n);
  std::vector<NodeId> missing;
  for (NodeId v = 0; v < n; ++v) {
    std::string summary = verbalize_topology(v, ranked, g);
    if (!annotations.has_texts()) {
      out[v] = std::move(summary);
    } else if (const auto& text = annotations.raw_texts.at(v)) {
      out[v] = *text + " " + summary;
    } else {
      missing.push_back(v);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      list += (i ? ", " : "") + std::to_string(missing[i]);
    }
    if (missing.size() > 20) list += fmt::format(", ... ({} total)", missing.size());
    throw ValidationError(fmt::format("text-attributed graph lacks raw text for node(s) {}", list));
  }
  return out;
}

SplitAccuracy evaluate(std::span<const PredictiveState> predictions, const Splits& splits,
                       const NodeAnnotations& annotations) {
  return {accuracy(predictions, annotations, splits.train),
          accuracy(predictions, annotations, splits.validation),
          accuracy(predictions, annotations, splits.test)};
}

PreparedGraph prepare_graph(const Graph& g, const LoopConfig& loop, std::uint64_t seed) {
  PreparedGraph p;
  p.ranked = rank_profile(compute_profile(g));
  p.topology.reserve(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) p.topology.push_back(verbalize_topology(v, p.ranked, g));
  p.structural = std::make_shared<const StructuralEmbedding>(
      embed_structural(g, loop.structural_dim, loop.structural_hops, seed));
  p.propagation = normalize_adjacency(g);
  return p;
}

RunReport run_das(const Dataset& data, const RunConfig& config, const TextEncoder& encoder,
                  const Refiner& refiner, const RunOptions& options) {
  Loop loop(data, config, encoder, refiner);
  return loop.run(options);
}

std::unique_ptr<Refiner> make_refiner(const RefinerConfig& config, const TextEncoder& encoder) {
  switch (config.kind) {
    case RefinerKind::kLlm: return std::make_unique<LlmRefiner>(llm_config_from_env(config.llm));
    case RefinerKind::kMockDescent:
      return std::make_unique<MockDescentRefiner>(encoder, config.max_token_moves);
    case RefinerKind::kIdentity: return std::make_unique<IdentityRefiner>();
  }
  throw ValidationError("unknown refiner kind");
}

void write_run_outputs(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  report.trace.write_json(dir / "trace.json");
  report.ledger.write_jsonl(dir / "ledger.jsonl");
  const auto entries = report.ledger.entries();
  const CostReport cost = cost_report(entries, report.refined_per_iteration, report.iterations);
  const DescentReport descent = check_descent(report.trace, 1e-9);
  nlohmann::json per_iter = nlohmann::json::array();
  for (const auto& a : report.iteration_accuracy) per_iter.push_back(accuracy_json(a));
  nlohmann::json calls_by_iter = nlohmann::json::object();
  for (const auto& [t, c] : cost.calls_per_iteration) calls_by_iter[std::to_string(t)] = c;
  const nlohmann::json doc = {
      {"seed", report.seed},
      {"iterations", report.iterations},
      {"accuracy", accuracy_json(report.accuracy)},
      {"iteration_accuracy", per_iter},
      {"cost", {{"total_calls", cost.total_calls},
                {"expected_calls", cost.expected_calls},
                {"calls_per_iteration", calls_by_iter},
                {"prompt_tokens", cost.prompt_tokens},
                {"response_tokens", cost.response_tokens},
                {"law_holds", cost.law_holds}}},
      {"descent", {{"monotone", descent.monotone},
                   {"bounded", descent.bounded},
                   {"all_exact", descent.all_exact},
                   {"max_increase", descent.max_increase}}}};
  std::ofstream out(dir / "report.json");
  if (!out) throw IoError(fmt::format("cannot write '{}'", (dir / "report.json").string()));
  out << doc.dump(2) << '\n';
}

std::string SeedSummary::format() const { return fmt::format("{:.4f} ± {:.4f}", mean, stddev); }

SeedSummary summarize_seeds(std::vector<std::uint64_t> seeds, std::vector<double> accuracy) {
  if (accuracy.empty() || seeds.size() != accuracy.size()) {
    throw ValidationError("seed summary needs one accuracy per seed and at least one seed");
  }
  SeedSummary s;
  s.seeds = std::move(seeds);
  s.test_accuracy = std::move(accuracy);
  const double k = static_cast<double>(s.test_accuracy.size());
  s.mean = std::accumulate(s.test_accuracy.begin(), s.test_accuracy.end(), 0.0) / k;
  if (s.test_accuracy.size() > 1) {
    double ss = 0.0;
    for (const double a : s.test_accuracy) ss += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(ss / (k - 1.0));
  }
  return s;
}

SeedSummary multi_seed(const Dataset& data, const RunConfig& config, const TextEncoder& encoder,
                       const Refiner& refiner, std::span<const std::uint64_t> seeds,
                       const std::optional<fs::path>& out_dir) {
  if (seeds.empty()) throw ValidationError("multi-seed run needs at least one seed");
  std::vector<double> acc;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto seed : seeds) {
    RunConfig c = config;
    c.train.seed = seed;
    RunOptions opts;
    if (out_dir) opts.out_dir = *out_dir / fmt::format("seed_{}", seed);
    const RunReport r = run_das(data, c, encoder, refiner, opts);
    acc.push_back(r.accuracy.test);
    rows.push_back({{"seed", seed}, {"accuracy", accuracy_json(r.accuracy)}});
  }
  SeedSummary s = summarize_seeds({seeds.begin(), seeds.end()}, acc);
  if (out_dir) {
    std::ofstream out(*out_dir / "seeds.json");
    out << nlohmann::json{{"runs", rows},
                          {"mean", s.mean},
                          {"stddev", s.stddev},
                          {"summary", s.format()}}
               .dump(2)
        << '\n';
  }
  return s;
}

CostReport cost_report(std::span<const LedgerEntry> ledger, std::size_t refined_nodes,
                       std::size_t iterations) {
  CostReport r;
  r.total_calls = ledger.size();
  r.expected_calls = refined_nodes * iterations;
  for (const auto& e : ledger) {
    ++r.calls_per_iteration[e.iteration];
    r.prompt_tokens += e.prompt_tokens;
    r.response_tokens += e.response_tokens;
  }
  r.law_holds = r.total_calls == r.expected_calls;
  for (std::size_t t = 0; t < iterations && r.law_holds; ++t) {
    const auto it = r.calls_per_iteration.find(t);
    const std::size_t count = it == r.calls_per_iteration.end() ? 0 : it->second;
    if (count != refined_nodes) r.law_holds = false;
  }
  return r;
}

TrainConfig grid_search(const Dataset& data, const PreparedGraph& prepared,
                        std::span<const std::string> descriptions, const TextEncoder& encoder,
                        const TrainConfig& base, std::size_t draws, std::uint64_t seed) {
  static constexpr std::size_t kHidden[] = {8, 16, 32, 64, 128, 256};
  static constexpr std::size_t kLayers[] = {1, 2, 3};
  static constexpr double kLr[] = {5e-2, 1e-2, 5e-3, 1e-3};
  static constexpr double kWd[] = {0.0, 5e-5, 1e-4, 5e-4};
  static constexpr double kDropout[] = {0.0, 0.1, 0.5, 0.8};
  if (draws == 0) return base;
  const Round round = encode_round(encoder, descriptions);
  Rng rng(seed);
  TrainConfig best = base;
  double best_acc = -1.0;
  for (std::size_t i = 0; i < draws; ++i) {
    TrainConfig c = base;
    c.hidden_dim = kHidden[rng.index(std::size(kHidden))];
    c.num_layers = kLayers[rng.index(std::size(kLayers))];
    c.learning_rate = kLr[rng.index(std::size(kLr))];
    c.weight_decay = kWd[rng.index(std::size(kWd))];
    c.dropout = kDropout[rng.index(std::size(kDropout))];
    const auto result =
        train(prepared.propagation, round.features, data.annotations, data.splits, c);
    const double acc = accuracy(result.predictions, data.annotations, data.splits.validation);
    if (acc > best_acc) {
      best_acc = acc;
      best = c;
    }
  }
  return best;
}

}  // namespace das
