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
#include "das/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "das/error.hpp"

namespace das {
namespace {

std::vector<bool> resolve_include(const std::vector<bool>& include, std::size_t n) {
  if (include.empty()) return std::vector<bool>(n, true);
  if (include.size() != n) throw ValidationError("include mask does not cover every node");
  return include;
}

std::size_t count_true(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Eigen::MatrixXd gram_matrix(std::span<const TextEmbedding> embeddings) {
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  const Eigen::Index dim = n == 0 ? 0 : embeddings[0].size();
  Eigen::MatrixXd e(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (embeddings[static_cast<std::size_t>(i)].size() != dim) {
      throw ValidationError("embeddings differ in dimension");
    }
    e.row(i) = embeddings[static_cast<std::size_t>(i)].transpose();
  }
  return e * e.transpose();
}

// Depth-first walk over subsets of increasing ids, carrying the running
// cross term sum_s G(v,s) and the pair sum sum_{s,s'} G(s,s').
struct SubsetSearch {
  const Eigen::MatrixXd& gram;
  Eigen::Index target;
  Eigen::Index n;
  std::size_t max_support;
  std::vector<Eigen::Index> chosen;
  double best = std::numeric_limits<double>::infinity();

  void visit(Eigen::Index first, double cross, double pairs) {
    for (Eigen::Index s = first; s < n; ++s) {
      if (s == target) continue;
      double added = gram(s, s);
      for (const auto c : chosen) added += 2.0 * gram(s, c);
      const double next_cross = cross + gram(target, s);
      const double next_pairs = pairs + added;
      const double k = static_cast<double>(chosen.size() + 1);
      const double d2 = gram(target, target) - 2.0 * next_cross / k + next_pairs / (k * k);
      best = std::min(best, d2);
      if (chosen.size() + 1 < max_support) {
        chosen.push_back(s);
        visit(s + 1, next_cross, next_pairs);
        chosen.pop_back();
      }
    }
  }
};

double min_anchor_distance(const Eigen::MatrixXd& gram, Eigen::Index v, std::size_t max_support) {
  SubsetSearch search{gram, v, gram.rows(), max_support, {}};
  search.chosen.reserve(max_support);
  search.visit(0, 0.0, 0.0);
  return std::max(search.best, 0.0);
}

void check_budget(std::size_t n, std::size_t included, const ObjectiveConfig& config) {
  config.validate();
  if (!exact_R_feasible(n, included, config)) {
    throw ValidationError(fmt::format(
        "exact R over {} nodes with K={} needs {} subsets, above the budget of {}", n,
        config.max_support, exact_subset_count(n, included, config.max_support),
        config.subset_budget));
  }
}

std::vector<double> r_terms_impl(std::span<const TextEmbedding> embeddings,
                                 const ObjectiveConfig& config, const std::vector<bool>& include,
                                 bool parallel) {
  const std::size_t n = embeddings.size();
  const auto mask = resolve_include(include, n);
  check_budget(n, count_true(mask), config);
  if (n < 2) return std::vector<double>(n, 0.0);
  const Eigen::MatrixXd gram = gram_matrix(embeddings);
  std::vector<double> terms(n, 0.0);
  const auto count = static_cast<std::int64_t>(n);
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t v = 0; v < count; ++v) {
      if (mask[static_cast<std::size_t>(v)]) {
        terms[static_cast<std::size_t>(v)] = min_anchor_distance(gram, v, config.max_support);
      }
    }
  } else {
    for (std::int64_t v = 0; v < count; ++v) {
      if (mask[static_cast<std::size_t>(v)]) {
        terms[static_cast<std::size_t>(v)] = min_anchor_distance(gram, v, config.max_support);
      }
    }
  }
  return terms;
}

double r_exact_impl(std::span<const TextEmbedding> embeddings, const ObjectiveConfig& config,
                    const std::vector<bool>& include, bool parallel) {
  double total = 0.0;
  for (const double t : r_terms_impl(embeddings, config, include, parallel)) total += t;
  return total;
}

nlohmann::json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void ObjectiveConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError(fmt::format("lambda must be finite and >= 0, got {}", lambda));
  }
  if (max_support < 1) throw ValidationError("max_support must be at least 1");
}

std::vector<bool> AnchorSet::included_mask() const {
  std::vector<bool> mask(anchors.size());
  for (std::size_t v = 0; v < anchors.size(); ++v) mask[v] = anchors[v].has_value();
  return mask;
}

std::size_t AnchorSet::max_support() const noexcept {
  return support.empty() ? 0 : *std::max_element(support.begin(), support.end());
}

AnchorSet anchors_from_exemplars(std::span<const ExemplarSet> exemplar_sets,
                                 const Memory& memory) {
  const std::size_t n = memory.size();
  if (exemplar_sets.size() != n) throw ValidationError("exemplar sets do not cover every node");
  AnchorSet out;
  out.anchors.resize(n);
  out.support.assign(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    const auto& set = exemplar_sets[v];
    if (set.target != v) throw ValidationError(fmt::format("exemplar set {} is out of order", v));
    if (set.members.empty()) {
      out.excluded.push_back(v);
      continue;
    }
    Eigen::VectorXd m = Eigen::VectorXd::Zero(memory.entry(v).text_embedding.size());
    for (const auto& e : set.members) m += memory.entry(e.node).text_embedding;
    m /= static_cast<double>(set.members.size());
    out.anchors[v] = std::move(m);
    out.support[v] = set.members.size();
  }
  return out;
}

double omega(std::span<const TextEmbedding> embeddings, const AnchorSet& anchors) {
  if (embeddings.size() != anchors.anchors.size()) {
    throw ValidationError("anchors do not cover every node");
  }
  double total = 0.0;
  for (std::size_t v = 0; v < embeddings.size(); ++v) {
    if (anchors.anchors[v]) total += (embeddings[v] - *anchors.anchors[v]).squaredNorm();
  }
  return total;
}

double omega(std::span<const std::string> descriptions, const AnchorSet& anchors,
             const TextEncoder& encoder) {
  const auto emb = encoder.encode_batch(descriptions);
  return omega(emb, anchors);
}

std::uint64_t exact_subset_count(std::size_t num_nodes, std::size_t num_included,
                                 std::size_t max_support) noexcept {
  if (num_nodes < 2) return 0;
  const std::uint64_t m = num_nodes - 1;
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t per_node = 0;
  std::uint64_t binom = 1;  // C(m, 0)
  for (std::uint64_t k = 1; k <= std::min<std::uint64_t>(max_support, m); ++k) {
    const std::uint64_t factor = m - k + 1;
    if (binom > kMax / factor) return kMax;
    binom = binom * factor / k;
    if (per_node > kMax - binom) return kMax;
    per_node += binom;
  }
  if (num_included != 0 && per_node > kMax / num_included) return kMax;
  return per_node * num_included;
}

bool exact_R_feasible(std::size_t num_nodes, std::size_t num_included,
                      const ObjectiveConfig& config) noexcept {
  return exact_subset_count(num_nodes, num_included, config.max_support) <= config.subset_budget;
}

double regularizer_R_exact(std::span<const TextEmbedding> embeddings,
                           const ObjectiveConfig& config, const std::vector<bool>& include) {
  return r_exact_impl(embeddings, config, include, true);
}

double regularizer_R_exact(std::span<const std::string> descriptions, const TextEncoder& encoder,
                           const ObjectiveConfig& config, const std::vector<bool>& include) {
  const auto emb = encoder.encode_batch(descriptions);
  return regularizer_R_exact(emb, config, include);
}

std::vector<double> regularizer_R_terms(std::span<const TextEmbedding> embeddings,
                                        const ObjectiveConfig& config,
                                        const std::vector<bool>& include) {
  return r_terms_impl(embeddings, config, include, true);
}

namespace serial {
double regularizer_R_exact(std::span<const TextEmbedding> embeddings,
                           const ObjectiveConfig& config, const std::vector<bool>& include) {
  return r_exact_impl(embeddings, config, include, false);
}
}  // namespace serial

double supervised_term(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                       const SupervisedContext& context) {
  if (!context.prop || !context.annotations) {
    throw ValidationError("supervised context is incomplete");
  }
  const Features x = stack_features(embeddings);
  const auto predictions = forward(params, x, *context.prop);
  return supervised_loss(predictions, *context.annotations, context.train_nodes);
}

ObjectiveValue global_J(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                        const SupervisedContext& context, const ObjectiveConfig& config,
                        const std::vector<bool>& include, const AnchorSet* fallback) {
  config.validate();
  ObjectiveValue out;
  out.supervised = supervised_term(params, embeddings, context);
  const auto mask = resolve_include(include, embeddings.size());
  if (config.lambda == 0.0) {
    out.regularizer = 0.0;
  } else if (exact_R_feasible(embeddings.size(), count_true(mask), config)) {
    out.regularizer = regularizer_R_exact(embeddings, config, mask);
  } else {
    if (!fallback) {
      throw ValidationError("exact R is out of budget and no anchors were supplied");
    }
    out.regularizer = omega(embeddings, *fallback);
    out.exact = false;
  }
  out.value = out.supervised + config.lambda * out.regularizer;
  return out;
}

double surrogate_U(const ModelParams& params, std::span<const TextEmbedding> embeddings,
                   const AnchorSet& anchors, const SupervisedContext& context, double lambda) {
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  return supervised_term(params, embeddings, context) + lambda * omega(embeddings, anchors);
}

MajorizationReport check_majorization(double supervised, std::span<const TextEmbedding> embeddings,
                                      const AnchorSet& anchors, const ObjectiveConfig& config,
                                      double tolerance) {
  MajorizationReport r;
  r.supervised = supervised;
  const auto mask = anchors.included_mask();
  r.R = regularizer_R_exact(embeddings, config, mask);
  r.omega = omega(embeddings, anchors);
  r.J = supervised + config.lambda * r.R;
  r.U = supervised + config.lambda * r.omega;
  r.margin = r.U - r.J;
  r.admissible = anchors.max_support() <= config.max_support;
  r.majorizes = r.J <= r.U + tolerance;
  // With M_v restricted to the retrieved anchor, the minimum over M_v is the
  // anchor's own distance and the regularizer coincides with Omega.
  double restricted = 0.0;
  for (std::size_t v = 0; v < embeddings.size(); ++v) {
    if (anchors.anchors[v]) restricted += (embeddings[v] - *anchors.anchors[v]).squaredNorm();
  }
  r.J_restricted = supervised + config.lambda * restricted;
  r.tight_restricted = std::abs(r.J_restricted - r.U) <= tolerance;
  return r;
}

void ObjectiveTrace::write_json(const std::filesystem::path& path) const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"iteration", e.iteration},
                            {"J", e.J},
                            {"supervised", e.supervised},
                            {"regularizer", e.regularizer},
                            {"exact", e.exact},
                            {"omega", optional_json(e.omega)},
                            {"omega_refined", optional_json(e.omega_refined)},
                            {"margin", optional_json(e.margin)},
                            {"anchored_nodes", e.anchored_nodes},
                            {"excluded", e.excluded},
                            {"refined_accepted", e.refined_accepted},
                            {"model_accepted", e.model_accepted}});
  }
  const nlohmann::json doc = {{"lambda", lambda}, {"entries", entries_json}};
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

ObjectiveTrace ObjectiveTrace::read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    const auto doc = nlohmann::json::parse(in);
    ObjectiveTrace trace;
    trace.lambda = doc.at("lambda").get<double>();
    for (const auto& j : doc.at("entries")) {
      TraceEntry e;
      e.iteration = j.at("iteration").get<std::size_t>();
      e.J = j.at("J").get<double>();
      e.supervised = j.at("supervised").get<double>();
      e.regularizer = j.at("regularizer").get<double>();
      e.exact = j.at("exact").get<bool>();
      e.omega = optional_from(j.at("omega"));
      e.omega_refined = optional_from(j.at("omega_refined"));
      e.margin = optional_from(j.at("margin"));
      e.anchored_nodes = j.at("anchored_nodes").get<std::size_t>();
      e.excluded = j.at("excluded").get<std::vector<NodeId>>();
      e.refined_accepted = j.at("refined_accepted").get<std::size_t>();
      e.model_accepted = j.at("model_accepted").get<bool>();
      trace.entries.push_back(std::move(e));
    }
    return trace;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

DescentReport check_descent(const ObjectiveTrace& trace, double tolerance) {
  DescentReport r;
  for (const auto& e : trace.entries) {
    if (!std::isfinite(e.J) || e.J < 0.0) r.bounded = false;
    if (!e.exact) r.all_exact = false;
  }
  for (std::size_t t = 0; t + 1 < trace.entries.size(); ++t) {
    const double increase = trace.entries[t + 1].J - trace.entries[t].J;
    r.max_increase = std::max(r.max_increase, increase);
    if (increase > tolerance) {
      r.monotone = false;
      r.violations.push_back({trace.entries[t].iteration, increase});
    }
  }
  return r;
}

}  // namespace das
