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
// Serial reference versus OpenMP kernel, one pair per hot spot.

#include <benchmark/benchmark.h>

#include "das/memory.hpp"
#include "das/structural_embedding.hpp"
#include "das/structural_features.hpp"
#include "das/surrogate.hpp"
#include "instances.hpp"
#include "oracles.hpp"

namespace {

using namespace das;

const Graph& bench_graph() {
  static const Graph g = oracle::random_connected_graph(11, 400, 0.02);
  return g;
}

void BM_BetweennessSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(serial::compute_betweenness(bench_graph()));
}
void BM_BetweennessParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(compute_betweenness(bench_graph()));
}

const std::vector<StructuralSignature>& bench_signatures() {
  static const auto sigs = build_signatures(bench_graph(), 2);
  return sigs;
}

void BM_DistanceMatrixSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(serial::signature_distance_matrix(bench_signatures()));
}
void BM_DistanceMatrixParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(signature_distance_matrix(bench_signatures()));
}

const testing::RetrievalInstance& bench_instance() {
  static const auto inst = testing::make_retrieval_instance(5, 300);
  return *inst;
}

void BM_RetrieveAllSerial(benchmark::State& state) {
  const auto& inst = bench_instance();
  const RetrievalConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::retrieve_all(inst.memory, config, inst.context()));
  }
}
void BM_RetrieveAllParallel(benchmark::State& state) {
  const auto& inst = bench_instance();
  const RetrievalConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(retrieve_all(inst.memory, config, inst.context()));
}

const testing::MajorizationFixture& bench_fixture() {
  static const auto f = testing::make_majorization_fixture(3, 40, 3, 32);
  return f;
}

void BM_ExactRSerial(benchmark::State& state) {
  const ObjectiveConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::regularizer_R_exact(bench_fixture().embeddings, config));
  }
}
void BM_ExactRParallel(benchmark::State& state) {
  const ObjectiveConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(regularizer_R_exact(bench_fixture().embeddings, config));
  }
}

BENCHMARK(BM_BetweennessSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BetweennessParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceMatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceMatrixParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RetrieveAllSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RetrieveAllParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactRSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactRParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
