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
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "das/error.hpp"
#include "das/memory.hpp"
#include "das/pipeline.hpp"
#include "das/random.hpp"
#include "das/synthetic.hpp"
#include "fixtures.hpp"
#include "run_configs.hpp"

namespace das {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::descent_config;

std::vector<std::string> read_description_lines(const fs::path& path) {
  std::vector<std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto node = j.at("node").get<std::size_t>();
    if (out.size() <= node) out.resize(node + 1);
    out[node] = j.at("description").get<std::string>();
  }
  return out;
}

// Ledger equality with the wall-clock latency left out.
void expect_same_ledger(const std::vector<LedgerEntry>& a, const std::vector<LedgerEntry>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].node, b[i].node) << i;
    EXPECT_EQ(a[i].iteration, b[i].iteration) << i;
    EXPECT_EQ(a[i].prompt_tokens, b[i].prompt_tokens) << i;
    EXPECT_EQ(a[i].response_tokens, b[i].response_tokens) << i;
    EXPECT_EQ(a[i].status, b[i].status) << i;
    EXPECT_EQ(a[i].attempts, b[i].attempts) << i;
  }
}

NodeAnnotations unlabeled(std::size_t n, std::size_t classes) {
  NodeAnnotations a;
  a.labels.assign(n, std::nullopt);
  a.num_classes = classes;
  for (std::size_t c = 0; c < classes; ++c) a.class_names.push_back("class_" + std::to_string(c));
  return a;
}

TEST(InitializeDescriptions, TextFreeIsTheTopologySummary) {
  const Graph g = testing::triangle();
  const auto ranked = rank_profile(compute_profile(g));
  const auto d = initialize_descriptions(g, unlabeled(3, 2), ranked);
  ASSERT_EQ(d.size(), 3u);
  for (NodeId v = 0; v < 3; ++v) {
    EXPECT_EQ(d[v], verbalize_topology(v, ranked, g));
    EXPECT_TRUE(d[v].starts_with("Given a node from a")) << d[v];
  }
}

TEST(InitializeDescriptions, TextAttributedPrefixesRawText) {
  const Graph g = testing::path3();
  const auto ranked = rank_profile(compute_profile(g));
  NodeAnnotations a = unlabeled(3, 2);
  a.raw_texts = {std::string("Deep nets."), std::string("Graphs."), std::string("X.")};
  const auto d = initialize_descriptions(g, a, ranked);
  EXPECT_EQ(d[2], "X. " + verbalize_topology(2, ranked, g));
  EXPECT_TRUE(d[2].starts_with("X. Given a node from a"));
}

TEST(InitializeDescriptions, PartialTextIsRejectedWithNodeIds) {
  const Graph g = testing::path3();
  const auto ranked = rank_profile(compute_profile(g));
  NodeAnnotations a = unlabeled(3, 2);
  a.raw_texts = {std::string("a"), std::nullopt, std::string("c")};
  try {
    initialize_descriptions(g, a, ranked);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos) << e.what();
  }
}

TEST(Evaluate, PerfectPredictorScoresOne) {
  NodeAnnotations a = unlabeled(6, 3);
  std::vector<PredictiveState> preds;
  for (std::uint32_t v = 0; v < 6; ++v) {
    a.labels[v] = v % 3;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    p(v % 3) = 1.0;
    preds.push_back(PredictiveState::from_probabilities(p));
  }
  const Splits s{{0, 1}, {2, 3}, {4, 5}};
  const SplitAccuracy acc = evaluate(preds, s, a);
  EXPECT_EQ(acc.train, 1.0);
  EXPECT_EQ(acc.validation, 1.0);
  EXPECT_EQ(acc.test, 1.0);
}

TEST(Evaluate, UniformRandomPredictorIsNearChance) {
  constexpr std::size_t n = 400;
  NodeAnnotations a = unlabeled(n, 4);
  Rng rng(17);
  std::vector<PredictiveState> preds;
  Splits s;
  for (std::size_t v = 0; v < n; ++v) {
    a.labels[v] = static_cast<std::uint32_t>(v % 4);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
    p(static_cast<Eigen::Index>(rng.index(4))) = 1.0;
    preds.push_back(PredictiveState::from_probabilities(p));
    s.test.push_back(static_cast<NodeId>(v));
  }
  s.train = {0};
  s.validation = {1};
  EXPECT_NEAR(evaluate(preds, s, a).test, 0.25, 0.07);
}

TEST(Evaluate, EmptySplitThrows) {
  NodeAnnotations a = unlabeled(2, 2);
  a.labels = {0u, 1u};
  const std::vector<PredictiveState> preds(
      2, PredictiveState::from_probabilities(Eigen::VectorXd::Constant(2, 0.5)));
  EXPECT_THROW(evaluate(preds, Splits{{0}, {1}, {}}, a), ValidationError);
}

TEST(SeedSummary, TwoSeeds) {
  const SeedSummary s = summarize_seeds({0, 1}, {0.6, 0.8});
  EXPECT_NEAR(s.mean, 0.7, 1e-12);
  EXPECT_NEAR(s.stddev, 0.1414213562373095, 1e-12);
  EXPECT_EQ(s.format(), "0.7000 ± 0.1414");
}

TEST(SeedSummary, OneSeedHasZeroSpread) {
  const SeedSummary s = summarize_seeds({3}, {0.42});
  EXPECT_EQ(s.mean, 0.42);
  EXPECT_EQ(s.stddev, 0.0);
  EXPECT_THROW(summarize_seeds({}, {}), ValidationError);
  EXPECT_THROW(summarize_seeds({1, 2}, {0.5}), ValidationError);
}

std::vector<LedgerEntry> synthetic_ledger(std::size_t nodes, std::size_t iterations) {
  std::vector<LedgerEntry> out;
  for (std::size_t t = 0; t < iterations; ++t) {
    for (std::size_t v = 0; v < nodes; ++v) {
      out.push_back({static_cast<NodeId>(v), t, 100, 20, 1.0, "ok", 1});
    }
  }
  return out;
}

TEST(CostReport, CallCountLaw) {
  const auto one = synthetic_ledger(16, 1);
  const CostReport a = cost_report(one, 16, 1);
  EXPECT_EQ(a.total_calls, 16u);
  EXPECT_TRUE(a.law_holds);
  EXPECT_EQ(a.prompt_tokens, 1600u);
  EXPECT_EQ(a.response_tokens, 320u);

  const auto three = synthetic_ledger(10, 3);
  const CostReport b = cost_report(three, 10, 3);
  EXPECT_EQ(b.total_calls, 30u);
  EXPECT_TRUE(b.law_holds);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(b.calls_per_iteration.at(t), 10u);

  const CostReport c = cost_report({}, 10, 0);
  EXPECT_EQ(c.total_calls, 0u);
  EXPECT_TRUE(c.law_holds);
}

TEST(CostReport, UnevenIterationsBreakTheLaw) {
  auto ledger = synthetic_ledger(10, 3);
  ledger[0].iteration = 1;  // same total, wrong distribution
  EXPECT_FALSE(cost_report(ledger, 10, 3).law_holds);
  ledger.pop_back();
  EXPECT_FALSE(cost_report(ledger, 10, 3).law_holds);
}

TEST(RunDas, DescentFixtureLedgerMatchesCallLaw) {
  const Dataset data = make_descent_fixture(0);
  const RunConfig config = descent_config();
  const HashEncoder encoder;
  const MockDescentRefiner refiner(encoder, config.refiner.max_token_moves);
  const RunReport r = run_das(data, config, encoder, refiner);
  EXPECT_EQ(r.trace.entries.size(), config.loop.iterations + 1);
  EXPECT_EQ(r.iteration_accuracy.size(), config.loop.iterations);
  EXPECT_EQ(r.refined_per_iteration, data.graph.num_nodes());
  const auto entries = r.ledger.entries();
  EXPECT_TRUE(cost_report(entries, r.refined_per_iteration, config.loop.iterations).law_holds);
  EXPECT_TRUE(check_descent(r.trace, 1e-9).monotone);
}

TEST(RunDas, RepeatedSubsetIdsAreRefinedOnce) {
  const Dataset data = make_descent_fixture(0);
  RunConfig config = descent_config();
  config.loop.iterations = 1;
  config.refiner.options.node_subset = std::vector<NodeId>{4, 2, 4, 9, 2};
  const HashEncoder encoder;
  const IdentityRefiner identity;
  const RunReport r = run_das(data, config, encoder, identity);
  EXPECT_EQ(r.refined_per_iteration, 3u);
  EXPECT_EQ(r.ledger.size(), 3u);
  const auto entries = r.ledger.entries();
  EXPECT_TRUE(cost_report(entries, r.refined_per_iteration, 1).law_holds);
}

TEST(RunDas, IdentityRefinerIsAFixedPoint) {
  const Dataset data = make_descent_fixture(1);
  const HashEncoder encoder;
  const IdentityRefiner identity;
  RunConfig looped = descent_config(1);
  looped.loop.iterations = 2;
  RunConfig single = looped;
  single.loop.iterations = 0;
  const RunReport a = run_das(data, looped, encoder, identity);
  const RunReport b = run_das(data, single, encoder, identity);
  EXPECT_EQ(a.final_descriptions, a.initial_descriptions);
  EXPECT_EQ(a.final_descriptions, b.final_descriptions);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(b.ledger.size(), 0u);
}

class ResumeTest : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ResumeTest, ResumedRunIsBitIdentical) {
  const Dataset data = make_descent_fixture(2);
  const RunConfig config = descent_config(2);
  const HashEncoder encoder;
  const MockDescentRefiner refiner(encoder, config.refiner.max_token_moves);

  TempDir full_dir, resumed_dir;
  RunOptions full_opts;
  full_opts.out_dir = full_dir.path();
  const RunReport full = run_das(data, config, encoder, refiner, full_opts);

  // Copy only the checkpoints up to the resume point, as if the run had
  // been interrupted right after writing them.
  const std::size_t r = GetParam();
  RunOptions first_opts;
  first_opts.out_dir = resumed_dir.path();
  run_das(data, config, encoder, refiner, first_opts);
  for (std::size_t t = r + 1; t < config.loop.iterations; ++t) {
    fs::remove_all(resumed_dir.path() / "checkpoints" / ("iter_" + std::to_string(t)));
  }
  RunOptions resume_opts;
  resume_opts.out_dir = resumed_dir.path();
  resume_opts.resume_after = r;
  const RunReport resumed = run_das(data, config, encoder, refiner, resume_opts);

  EXPECT_EQ(resumed.trace, full.trace);
  EXPECT_EQ(resumed.final_descriptions, full.final_descriptions);
  EXPECT_EQ(resumed.final_model, full.final_model);
  EXPECT_EQ(resumed.accuracy, full.accuracy);
  EXPECT_EQ(resumed.iteration_accuracy, full.iteration_accuracy);
  expect_same_ledger(resumed.ledger.entries(), full.ledger.entries());
  EXPECT_EQ(testing::read_file(resumed_dir.path() / "final_descriptions.jsonl"),
            testing::read_file(full_dir.path() / "final_descriptions.jsonl"));
}

INSTANTIATE_TEST_SUITE_P(AfterEachIteration, ResumeTest, ::testing::Values(0u, 1u, 2u));

TEST(RunDas, ResumeWithoutCheckpointFails) {
  const Dataset data = make_descent_fixture(0);
  const HashEncoder encoder;
  const IdentityRefiner identity;
  TempDir dir;
  RunOptions opts;
  opts.out_dir = dir.path();
  opts.resume_after = 1;
  EXPECT_ANY_THROW(run_das(data, descent_config(), encoder, identity, opts));
  opts.out_dir.reset();
  EXPECT_THROW(run_das(data, descent_config(), encoder, identity, opts), ValidationError);
}

TEST(RunDas, CheckpointDescriptionsReencodeToMemoryDump) {
  const Dataset data = make_descent_fixture(3);
  const RunConfig config = descent_config(3);
  const HashEncoder encoder;
  const MockDescentRefiner refiner(encoder, config.refiner.max_token_moves);
  TempDir dir;
  RunOptions opts;
  opts.out_dir = dir.path();
  run_das(data, config, encoder, refiner, opts);

  const auto structural = std::make_shared<const StructuralEmbedding>(
      read_structural_embedding((dir.path() / "structural").string()));
  for (std::size_t t = 0; t < config.loop.iterations; ++t) {
    const fs::path ckpt = dir.path() / "checkpoints" / ("iter_" + std::to_string(t));
    ASSERT_TRUE(fs::exists(ckpt)) << ckpt;
    EXPECT_FALSE(fs::exists(ckpt.string() + ".partial"));
    const auto descriptions = read_description_lines(ckpt / "descriptions.jsonl");
    const Memory memory = read_memory(ckpt / "memory.jsonl", structural, encoder.dim());
    ASSERT_EQ(memory.entries().size(), descriptions.size());
    EXPECT_EQ(memory.iteration(), t);
    for (std::size_t v = 0; v < descriptions.size(); ++v) {
      const auto& e = memory.entry(static_cast<NodeId>(v));
      EXPECT_EQ(e.description, descriptions[v]);
      const TextEmbedding fresh = encoder.encode(descriptions[v]);
      EXPECT_TRUE(fresh == e.text_embedding) << "iteration " << t << " node " << v;
    }
  }
}

TEST(MultiSeed, WritesOneRunPerSeed) {
  const Dataset data = make_descent_fixture(0);
  RunConfig config = descent_config();
  config.loop.iterations = 1;
  const HashEncoder encoder;
  const IdentityRefiner identity;
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  TempDir dir;
  const SeedSummary s = multi_seed(data, config, encoder, identity, seeds, dir.path());
  EXPECT_EQ(s.test_accuracy.size(), 3u);
  for (const auto seed : seeds) {
    EXPECT_TRUE(fs::exists(dir.path() / ("seed_" + std::to_string(seed)) / "final_model.txt"));
  }
  const auto doc = nlohmann::json::parse(testing::read_file(dir.path() / "seeds.json"));
  EXPECT_EQ(doc.at("summary").get<std::string>(), s.format());
  for (const double a : s.test_accuracy) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(GridSearch, DeterministicAndDrawnFromGrid) {
  const Dataset data = make_descent_fixture(0);
  const RunConfig config = descent_config();
  const PreparedGraph prepared = prepare_graph(data.graph, config.loop, 0);
  const auto descriptions = initialize_descriptions(data.graph, data.annotations, prepared.ranked);
  const HashEncoder encoder;
  TrainConfig base = config.train;
  base.max_epochs = 20;
  const TrainConfig a = grid_search(data, prepared, descriptions, encoder, base, 4, 9);
  const TrainConfig b = grid_search(data, prepared, descriptions, encoder, base, 4, 9);
  EXPECT_EQ(a.hidden_dim, b.hidden_dim);
  EXPECT_EQ(a.num_layers, b.num_layers);
  EXPECT_EQ(a.learning_rate, b.learning_rate);
  EXPECT_EQ(a.weight_decay, b.weight_decay);
  EXPECT_EQ(a.dropout, b.dropout);
  const std::vector<std::size_t> hidden{8, 16, 32, 64, 128, 256};
  EXPECT_NE(std::find(hidden.begin(), hidden.end(), a.hidden_dim), hidden.end());
  EXPECT_GE(a.num_layers, 1u);
  EXPECT_LE(a.num_layers, 3u);
  EXPECT_EQ(a.max_epochs, 20u);
  const TrainConfig none = grid_search(data, prepared, descriptions, encoder, base, 0, 9);
  EXPECT_EQ(none.hidden_dim, base.hidden_dim);
}

TEST(LoadDataset, RoundTripsWrittenDataset) {
  const Dataset data = make_citation_like(4);
  TempDir dir;
  write_dataset(data, dir.path());
  DataConfig c;
  c.edges = dir.path() / "edges.txt";
  c.labels = dir.path() / "labels.csv";
  c.texts = dir.path() / "texts.tsv";
  c.class_names = dir.path() / "class_names.txt";
  c.splits = dir.path() / "splits.json";
  c.min_nodes = data.graph.num_nodes();
  const Dataset back = load_dataset(c);
  EXPECT_EQ(back.graph.edges(), data.graph.edges());
  EXPECT_EQ(back.annotations.labels, data.annotations.labels);
  EXPECT_EQ(back.annotations.raw_texts, data.annotations.raw_texts);
  EXPECT_EQ(back.annotations.class_names, data.annotations.class_names);
  EXPECT_EQ(back.splits, data.splits);
}

TEST(Synthetic, AirportLikeShape) {
  const Dataset d = make_airport_like(0);
  EXPECT_EQ(d.graph.num_nodes(), 131u);
  EXPECT_EQ(d.graph.num_edges(), 2137u);
  EXPECT_FALSE(d.annotations.has_texts());
  EXPECT_EQ(d.annotations.num_classes, 4u);
  EXPECT_EQ(d.splits.train.size(), 40u);
  EXPECT_EQ(d.splits.validation.size(), 80u);
  std::vector<std::size_t> counts(4, 0);
  for (const auto& l : d.annotations.labels) ++counts.at(l.value());
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  EXPECT_LE(*hi - *lo, 1u);
  EXPECT_EQ(make_airport_like(0).graph, d.graph);
}

TEST(Synthetic, CitationLikeCarriesTexts) {
  const Dataset d = make_citation_like(0);
  EXPECT_EQ(d.graph.num_nodes(), 120u);
  ASSERT_TRUE(d.annotations.has_texts());
  for (const auto& t : d.annotations.raw_texts) {
    ASSERT_TRUE(t.has_value());
    EXPECT_FALSE(t->empty());
  }
  EXPECT_EQ(d.splits.train.size(), 20u);
}

TEST(Synthetic, DescentFixtureShape) {
  const Dataset d = make_descent_fixture(0);
  EXPECT_EQ(d.graph.num_nodes(), 30u);
  EXPECT_EQ(d.annotations.num_classes, 3u);
}

}  // namespace
}  // namespace das
