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

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "das/structural_features.hpp"
#include "das/surrogate.hpp"
#include "fixtures.hpp"

namespace das {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int status = -1;
  std::string output;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(DAS_CLI_PATH) + " --log-level warn " + args + " 2>&1";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) o.output.append(buf.data(), got);
  const int raw = ::pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, SynthRefineReportResume) {
  testing::TempDir dir;
  const fs::path data = dir.path() / "descent";
  const Outcome synth = run_cli("synth descent " + quoted(data));
  ASSERT_EQ(synth.status, 0) << synth.output;
  ASSERT_TRUE(fs::exists(data / "das.ini"));

  const std::string cfg = "--config " + quoted(data / "das.ini");
  const Outcome refine = run_cli(cfg + " --iterations 2 refine");
  ASSERT_EQ(refine.status, 0) << refine.output;
  EXPECT_NE(refine.output.find("descent: non-increasing"), std::string::npos) << refine.output;
  const fs::path run = data / "run";
  for (const char* f : {"trace.json", "ledger.jsonl", "report.json", "final_model.txt",
                        "final_descriptions.jsonl", "initial_descriptions.jsonl"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_TRUE(fs::exists(run / "checkpoints" / "iter_0"));
  EXPECT_TRUE(fs::exists(run / "checkpoints" / "iter_1"));

  const Outcome report = run_cli("report " + quoted(run));
  ASSERT_EQ(report.status, 0) << report.output;
  EXPECT_NE(report.output.find("cost law: holds"), std::string::npos) << report.output;
  EXPECT_NE(report.output.find("calls: 60 (expected 60)"), std::string::npos) << report.output;

  const auto first_trace = ObjectiveTrace::read_json(run / "trace.json");
  const std::string first_final = testing::read_file(run / "final_descriptions.jsonl");
  const Outcome resumed = run_cli(cfg + " --iterations 2 refine --resume-after 0");
  ASSERT_EQ(resumed.status, 0) << resumed.output;
  EXPECT_EQ(ObjectiveTrace::read_json(run / "trace.json"), first_trace);
  EXPECT_EQ(testing::read_file(run / "final_descriptions.jsonl"), first_final);
}

TEST(Cli, FeaturesVerbalizeAndEval) {
  testing::TempDir dir;
  const fs::path data = dir.path() / "airport";
  ASSERT_EQ(run_cli("synth airport " + quoted(data)).status, 0);
  const std::string cfg = "--config " + quoted(data / "das.ini");

  const fs::path features = dir.path() / "features.jsonl";
  ASSERT_EQ(run_cli(cfg + " features -o " + quoted(features)).status, 0);
  const std::string text = testing::read_file(features);
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  for (const auto s : kAllStatistics) {
    const std::string name(statistic_name(s));
    ASSERT_TRUE(first.contains(name)) << name;
    EXPECT_GE(first.at(name).at("rank").get<std::size_t>(), 1u);
  }

  const fs::path topology = dir.path() / "topology.jsonl";
  ASSERT_EQ(run_cli(cfg + " verbalize -o " + quoted(topology)).status, 0);
  EXPECT_NE(testing::read_file(topology).find("Given a node from a"), std::string::npos);

  const fs::path model = dir.path() / "model.txt";
  const Outcome train = run_cli(cfg + " train --model " + quoted(model));
  ASSERT_EQ(train.status, 0) << train.output;
  const Outcome eval = run_cli(cfg + " eval --model " + quoted(model));
  ASSERT_EQ(eval.status, 0) << eval.output;
  EXPECT_NE(eval.output.find("test "), std::string::npos);
}

TEST(Cli, BadConfigurationExitsWithError) {
  testing::TempDir dir;
  const fs::path data = dir.path() / "descent";
  ASSERT_EQ(run_cli("synth descent " + quoted(data)).status, 0);
  const std::string cfg = "--config " + quoted(data / "das.ini");
  EXPECT_EQ(run_cli(cfg + " --alpha 1.5 refine").status, 2);
  EXPECT_EQ(run_cli(cfg + " --set nosuch.key=1 refine").status, 2);
  EXPECT_NE(run_cli("frobnicate").status, 0);
}

}  // namespace
}  // namespace das
