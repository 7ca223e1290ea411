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

#include "das/config.hpp"
#include "das/error.hpp"
#include "fixtures.hpp"

namespace das {
namespace {

using testing::TempDir;
using testing::write_file;

TEST(Config, DefaultsMirrorTuningCenter) {
  const RunConfig c;
  EXPECT_EQ(c.retrieval.top_k, 10u);
  EXPECT_EQ(c.retrieval.tau, 0.5);
  EXPECT_EQ(c.retrieval.alpha, 0.5);
  EXPECT_EQ(c.retrieval.candidate_pool, CandidatePool::kAll);
  EXPECT_EQ(c.loop.iterations, 3u);
  EXPECT_EQ(c.train.hidden_dim, 64u);
  EXPECT_EQ(c.train.num_layers, 2u);
  EXPECT_EQ(c.train.learning_rate, 1e-2);
  EXPECT_EQ(c.train.weight_decay, 5e-4);
  EXPECT_EQ(c.train.dropout, 0.5);
  EXPECT_EQ(c.train.max_epochs, 300u);
  EXPECT_EQ(c.objective.lambda, 0.1);
  EXPECT_EQ(c.encoder.dim, 4096u);
  EXPECT_FALSE(c.refiner.options.node_subset.has_value());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, LoadsIniAndResolvesRelativePaths) {
  TempDir dir;
  std::filesystem::create_directories(dir / "cfg");
  write_file(dir / "cfg" / "das.ini",
             "[data]\nedges = data/edges.txt\nlabels = /abs/labels.csv\ngraph_type = airport\n"
             "split_regime = high\n"
             "[retrieval]\nalpha = 0.25\ntop_k = 4\npool = train\nrequire_correct_train = off\n"
             "[refiner]\nkind = identity\nnodes = 3, 1, 2\nconcurrency = 2\n"
             "[train]\nlr = 0.5\nbackbone = mlp\n"
             "[objective]\nlambda = 0.3\n"
             "[run]\niterations = 1\nseeds = 0,1,2\nout_dir = out\n");
  const RunConfig c = load_run_config(dir / "cfg" / "das.ini");
  EXPECT_EQ(c.data.edges, dir / "cfg" / "data/edges.txt");
  EXPECT_EQ(c.data.labels, std::filesystem::path("/abs/labels.csv"));
  EXPECT_EQ(c.data.meta.graph_type, "airport");
  EXPECT_EQ(c.data.split_regime, SplitRegime::kHighLabel);
  EXPECT_EQ(c.retrieval.alpha, 0.25);
  EXPECT_EQ(c.retrieval.top_k, 4u);
  EXPECT_EQ(c.retrieval.candidate_pool, CandidatePool::kTrainOnly);
  EXPECT_FALSE(c.retrieval.require_correct_train);
  EXPECT_EQ(c.refiner.kind, RefinerKind::kIdentity);
  EXPECT_EQ(c.refiner.options.node_subset, (std::vector<NodeId>{3, 1, 2}));
  EXPECT_EQ(c.train.learning_rate, 0.5);
  EXPECT_EQ(c.train.backbone, Backbone::kMlp);
  EXPECT_EQ(c.objective.lambda, 0.3);
  EXPECT_EQ(c.loop.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(c.loop.out_dir, dir / "cfg" / "out");
}

TEST(Config, OverridesWinAndUnknownKeysFail) {
  RunConfig c;
  apply_overrides(c, {{"retrieval.tau", " 0.9 "}, {"run.iterations", "0"}, {"refiner.nodes", "all"}});
  EXPECT_EQ(c.retrieval.tau, 0.9);
  EXPECT_EQ(c.loop.iterations, 0u);
  EXPECT_THROW(apply_overrides(c, {{"retrieval.beta", "1"}}), ValidationError);
  EXPECT_THROW(apply_overrides(c, {{"train.lr", "fast"}}), ValidationError);
  EXPECT_THROW(apply_overrides(c, {{"train.epochs", "-3"}}), ValidationError);
  EXPECT_THROW(apply_overrides(c, {{"run.descent_guard", "maybe"}}), ValidationError);
  EXPECT_THROW(apply_overrides(c, {{"refiner.kind", "oracle"}}), ValidationError);
}

TEST(Config, ValidateRejectsOutOfRangeValues) {
  const auto bad = [](const char* key, const char* value) {
    RunConfig c;
    apply_overrides(c, {{key, value}});
    return c;
  };
  EXPECT_THROW(bad("retrieval.alpha", "1.5").validate(), ValidationError);
  EXPECT_THROW(bad("retrieval.tau", "-0.1").validate(), ValidationError);
  EXPECT_THROW(bad("retrieval.top_k", "0").validate(), ValidationError);
  EXPECT_THROW(bad("train.dropout", "1").validate(), ValidationError);
  EXPECT_THROW(bad("objective.lambda", "-1").validate(), ValidationError);
  EXPECT_THROW(bad("run.seeds", "").validate(), ValidationError);
  EXPECT_THROW(bad("refiner.concurrency", "0").validate(), ValidationError);
}

TEST(Config, MalformedIniReportsParseError) {
  TempDir dir;
  write_file(dir / "bad.ini", "[data\nedges = x\n");
  EXPECT_THROW(load_run_config(dir / "bad.ini"), ParseError);
  write_file(dir / "loose.ini", "edges = x\n");
  EXPECT_THROW(load_run_config(dir / "loose.ini"), ValidationError);
}

TEST(Config, RefinerNamesRoundTrip) {
  for (const auto k : {RefinerKind::kLlm, RefinerKind::kMockDescent, RefinerKind::kIdentity})
    EXPECT_EQ(refiner_kind_from_name(refiner_kind_name(k)), k);
}

}  // namespace
}  // namespace das
