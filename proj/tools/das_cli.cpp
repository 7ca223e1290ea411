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
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "das/config.hpp"
#include "das/error.hpp"
#include "das/parallel.hpp"
#include "das/pipeline.hpp"
#include "das/structural_embedding.hpp"
#include "das/structural_features.hpp"
#include "das/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out_dir;
  std::optional<double> alpha;
  std::optional<std::size_t> top_k;
  std::optional<double> tau;
  std::optional<std::size_t> iterations;
  std::optional<std::string> refiner;
  std::optional<std::string> encoder;
  std::vector<std::string> set;
  int threads = 0;
  std::string log_level = "info";
};

das::RunConfig resolve_config(const GlobalFlags& f) {
  das::RunConfig c = f.config ? das::load_run_config(*f.config) : das::RunConfig{};
  das::ConfigOverrides o;
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw das::ValidationError("--set expects section.key=value");
    o[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (f.seed) o["train.seed"] = std::to_string(*f.seed);
  if (f.out_dir) o["run.out_dir"] = f.out_dir->string();
  if (f.alpha) o["retrieval.alpha"] = fmt::format("{}", *f.alpha);
  if (f.top_k) o["retrieval.top_k"] = std::to_string(*f.top_k);
  if (f.tau) o["retrieval.tau"] = fmt::format("{}", *f.tau);
  if (f.iterations) o["run.iterations"] = std::to_string(*f.iterations);
  if (f.refiner) o["refiner.kind"] = *f.refiner;
  if (f.encoder) o["encoder.kind"] = *f.encoder;
  das::apply_overrides(c, o);
  c.validate();
  return c;
}

das::Graph load_graph(const das::RunConfig& c) {
  if (c.data.edges.empty()) throw das::ValidationError("data.edges is not configured");
  return das::load_edge_list(c.data.edges, c.data.min_nodes, c.data.meta);
}

void write_lines(const fs::path& path, const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path);
  if (!out) throw das::IoError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& r : rows) out << r.dump() << '\n';
}

std::unique_ptr<das::TextEncoder> encoder_for(const das::RunConfig& c) {
  return das::make_encoder(das::encoder_backend_from_env(c.encoder));
}

std::vector<std::string> read_description_file(const fs::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw das::IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line).at("description"));
  }
  if (out.size() != n) {
    throw das::ValidationError(
        fmt::format("{} has {} descriptions, graph has {} nodes", path.string(), out.size(), n));
  }
  return out;
}

void print_descent_table(const das::ObjectiveTrace& trace) {
  fmt::print("{:>4}  {:>14}  {:>14}  {:>14}  {:>12}  {}\n", "iter", "J", "Omega", "supervised",
             "margin", "kind");
  for (const auto& e : trace.entries) {
    fmt::print("{:>4}  {:>14.8f}  {:>14}  {:>14.8f}  {:>12}  {}\n", e.iteration, e.J,
               e.omega ? fmt::format("{:.8f}", *e.omega) : "-", e.supervised,
               e.margin ? fmt::format("{:.3e}", *e.margin) : "-", e.exact ? "exact" : "upper bound");
  }
  const auto d = das::check_descent(trace, 1e-9);
  fmt::print("descent: {} (max increase {:.3e}){}\n", d.passed() ? "non-increasing" : "VIOLATED",
             d.max_increase, d.all_exact ? "" : "; some values are surrogate upper bounds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAS: iterative node-description refinement for graph classification"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "INI configuration file");
  app.add_option("--seed", g.seed, "Training seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--alpha", g.alpha, "Semantic weight of the joint score");
  app.add_option("--top-k", g.top_k, "Exemplars retrieved per node");
  app.add_option("--tau", g.tau, "Normalized entropy threshold");
  app.add_option("--iterations", g.iterations, "Refinement iterations T");
  app.add_option("--refiner", g.refiner, "Refiner backend")
      ->check(CLI::IsMember({"llm", "mock", "identity"}));
  app.add_option("--encoder", g.encoder, "Text encoder backend")
      ->check(CLI::IsMember({"hash", "remote"}));
  app.add_option("--set", g.set, "Override any configuration key (section.key=value)");
  app.add_option("--threads", g.threads, "OpenMP thread cap (0: runtime default)");
  app.add_option("--log-level", g.log_level, "spdlog level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  fs::path features_out = "features.jsonl";
  auto* features = app.add_subcommand("features", "Structural statistics and ranks per node");
  features->add_option("-o,--output", features_out);

  fs::path verbalize_out = "topology.jsonl";
  auto* verbalize = app.add_subcommand("verbalize", "Topological summary per node");
  verbalize->add_option("-o,--output", verbalize_out);

  fs::path embed_out = "structural";
  auto* embed = app.add_subcommand("embed", "Structural role embedding (writes <stem>.txt/.json)");
  embed->add_option("-o,--output", embed_out);

  fs::path init_out = "initial_descriptions.jsonl";
  auto* init = app.add_subcommand("init", "Initial node descriptions");
  init->add_option("-o,--output", init_out);

  std::optional<fs::path> train_descriptions;
  fs::path train_model = "model.txt";
  std::size_t search_draws = 0;
  auto* train = app.add_subcommand("train", "Train the classifier on a description set");
  train->add_option("--descriptions", train_descriptions, "JSONL descriptions (default: initial)");
  train->add_option("--model", train_model, "Where to write the model");
  train->add_option("--search", search_draws, "Random-search draws over the tuning grid");

  std::optional<std::size_t> resume_after;
  std::vector<std::uint64_t> seeds;
  auto* refine = app.add_subcommand("refine", "Run the full refinement loop");
  refine->add_option("--resume-after", resume_after, "Continue after this checkpoint");
  refine->add_option("--seeds", seeds, "Run once per seed and aggregate test accuracy");

  fs::path eval_model;
  std::optional<fs::path> eval_descriptions;
  auto* eval = app.add_subcommand("eval", "Accuracy of a saved model per split");
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--descriptions", eval_descriptions);

  fs::path report_dir;
  auto* report = app.add_subcommand("report", "Descent table and cost summary of a run");
  report->add_option("run_dir", report_dir)->required();

  std::string synth_kind;
  fs::path synth_dir;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and matching config");
  synth->add_option("kind", synth_kind)->required()->check(
      CLI::IsMember({"airport", "citation", "descent"}));
  synth->add_option("dir", synth_dir)->required();
  synth->add_option("--data-seed", synth_seed);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  if (g.threads > 0) das::set_max_threads(g.threads);

  try {
    if (*synth) {
      das::Dataset d = *synth_kind.data() == 'a'   ? das::make_airport_like(synth_seed)
                       : *synth_kind.data() == 'c' ? das::make_citation_like(synth_seed)
                                                   : das::make_descent_fixture(synth_seed);
      das::write_dataset(d, synth_dir);
      std::ofstream cfg(synth_dir / "das.ini");
      cfg << "[data]\nedges = edges.txt\nlabels = labels.csv\nclass_names = class_names.txt\n"
          << "splits = splits.json\n"
          << (d.annotations.has_texts() ? "texts = texts.tsv\n" : "")
          << "num_nodes = " << d.graph.num_nodes() << "\n"
          << "graph_type = " << d.graph.meta().graph_type << "\n"
          << "node_type = " << d.graph.meta().node_type << "\n"
          << "edge_type = " << d.graph.meta().edge_type << "\n\n"
          << "[train]\nlr = 0.5\n\n"
          << (*synth_kind.data() == 'd' ? "[retrieval]\ntop_k = 3\ntau = 1.0\n\n" : "")
          << "[run]\nout_dir = run\n";
      fmt::print("wrote {} nodes, {} edges to {}\n", d.graph.num_nodes(), d.graph.num_edges(),
                 synth_dir.string());
      return 0;
    }
    if (*report) {
      const auto trace = das::ObjectiveTrace::read_json(report_dir / "trace.json");
      print_descent_table(trace);
      const auto ledger = das::CallLedger::read_jsonl(report_dir / "ledger.jsonl").entries();
      std::ifstream rep(report_dir / "report.json");
      std::size_t per_iter = 0;
      std::size_t iterations = trace.entries.empty() ? 0 : trace.entries.size() - 1;
      if (rep) {
        const auto j = nlohmann::json::parse(rep);
        per_iter = j.at("cost").at("expected_calls").get<std::size_t>() /
                   std::max<std::size_t>(iterations, 1);
      }
      const auto cost = das::cost_report(ledger, per_iter, iterations);
      fmt::print("calls: {} (expected {}), prompt tokens {}, response tokens {}\n",
                 cost.total_calls, cost.expected_calls, cost.prompt_tokens, cost.response_tokens);
      for (const auto& [t, c] : cost.calls_per_iteration) fmt::print("  iteration {}: {}\n", t, c);
      fmt::print("cost law: {}\n", cost.law_holds ? "holds" : "VIOLATED");
      return cost.law_holds ? 0 : 1;
    }

    const das::RunConfig config = resolve_config(g);
    if (*features) {
      const das::Graph graph = load_graph(config);
      const auto ranked = das::rank_profile(das::compute_profile(graph));
      std::vector<nlohmann::json> rows;
      for (das::NodeId v = 0; v < graph.num_nodes(); ++v) {
        nlohmann::json row = {{"node", v}};
        for (const auto s : das::kAllStatistics) {
          const std::string name(das::statistic_name(s));
          row[name] = {{"value", ranked.values.values(s)[v]}, {"rank", ranked.rank(s, v)}};
        }
        rows.push_back(std::move(row));
      }
      write_lines(features_out, rows);
    } else if (*verbalize) {
      const das::Graph graph = load_graph(config);
      const auto ranked = das::rank_profile(das::compute_profile(graph));
      std::vector<nlohmann::json> rows;
      for (das::NodeId v = 0; v < graph.num_nodes(); ++v) {
        rows.push_back({{"node", v}, {"summary", das::verbalize_topology(v, ranked, graph)}});
      }
      write_lines(verbalize_out, rows);
    } else if (*embed) {
      const das::Graph graph = load_graph(config);
      das::write_structural_embedding(
          das::embed_structural(graph, config.loop.structural_dim, config.loop.structural_hops,
                                config.train.seed),
          embed_out);
    } else if (*init) {
      const das::Dataset d = das::load_dataset(config.data);
      const auto ranked = das::rank_profile(das::compute_profile(d.graph));
      const auto desc = das::initialize_descriptions(d.graph, d.annotations, ranked);
      std::vector<nlohmann::json> rows;
      for (das::NodeId v = 0; v < desc.size(); ++v) rows.push_back({{"node", v}, {"description", desc[v]}});
      write_lines(init_out, rows);
    } else if (*train) {
      const das::Dataset d = das::load_dataset(config.data);
      const auto prepared = das::prepare_graph(d.graph, config.loop, config.train.seed);
      const auto encoder = encoder_for(config);
      const auto desc = train_descriptions
                            ? read_description_file(*train_descriptions, d.graph.num_nodes())
                            : das::initialize_descriptions(d.graph, d.annotations, prepared.ranked);
      das::TrainConfig tc = config.train;
      if (search_draws > 0) {
        tc = das::grid_search(d, prepared, desc, *encoder, tc, search_draws, config.train.seed);
        fmt::print("selected hidden={} layers={} lr={} wd={} dropout={}\n", tc.hidden_dim,
                   tc.num_layers, tc.learning_rate, tc.weight_decay, tc.dropout);
      }
      const auto emb = encoder->encode_batch(desc);
      const auto result =
          das::train(prepared.propagation, das::stack_features(emb), d.annotations, d.splits, tc);
      das::write_model(result.params, tc, train_model);
      const auto acc = das::evaluate(result.predictions, d.splits, d.annotations);
      fmt::print("best epoch {}: train {:.4f} validation {:.4f} test {:.4f}\n", result.best_epoch,
                 acc.train, acc.validation, acc.test);
    } else if (*eval) {
      const das::Dataset d = das::load_dataset(config.data);
      const auto prepared = das::prepare_graph(d.graph, config.loop, config.train.seed);
      const auto encoder = encoder_for(config);
      const auto desc = eval_descriptions
                            ? read_description_file(*eval_descriptions, d.graph.num_nodes())
                            : das::initialize_descriptions(d.graph, d.annotations, prepared.ranked);
      const auto params = das::read_model(eval_model);
      const auto emb = encoder->encode_batch(desc);
      const auto pred = das::forward(params, das::stack_features(emb), prepared.propagation);
      const auto acc = das::evaluate(pred, d.splits, d.annotations);
      fmt::print("train {:.4f} validation {:.4f} test {:.4f}\n", acc.train, acc.validation, acc.test);
    } else if (*refine) {
      const das::Dataset d = das::load_dataset(config.data);
      const auto encoder = encoder_for(config);
      const auto refiner = das::make_refiner(config.refiner, *encoder);
      if (!seeds.empty()) {
        const auto summary =
            das::multi_seed(d, config, *encoder, *refiner, seeds, config.loop.out_dir);
        fmt::print("test accuracy over {} seed(s): {}\n", summary.seeds.size(), summary.format());
      } else {
        das::RunOptions opts{config.loop.out_dir, resume_after};
        const auto r = das::run_das(d, config, *encoder, *refiner, opts);
        print_descent_table(r.trace);
        fmt::print("test accuracy {:.4f} (validation {:.4f}); {} refiner calls\n", r.accuracy.test,
                   r.accuracy.validation, r.ledger.size());
      }
    }
  } catch (const das::Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
