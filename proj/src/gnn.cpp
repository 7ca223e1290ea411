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
#include "das/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "das/error.hpp"
#include "das/random.hpp"

namespace das {
namespace {

struct ForwardCache {
  Features dropped_input;
  std::vector<Eigen::MatrixXd> dropped_hidden;  // index l-1 for layer l >= 1
  std::vector<Eigen::MatrixXd> hidden_scale;    // dropout scale per element, same indexing
  std::vector<Eigen::MatrixXd> pre;             // Z per layer
};

bool dropout_active(const DropoutKey& d) { return d.rate > 0.0; }

double keep_scale(const DropoutKey& d, std::uint64_t layer, std::uint64_t flat) {
  const double u = counter_uniform(d.seed, d.epoch, layer, flat);
  return u < d.rate ? 0.0 : 1.0 / (1.0 - d.rate);
}

void add_bias(Eigen::MatrixXd& z, const Eigen::RowVectorXd& b) { z.rowwise() += b; }

Eigen::MatrixXd propagate(const ModelParams& params, const PropagationMatrix& prop,
                          const Eigen::MatrixXd& m) {
  if (params.backbone == Backbone::kMlp) return m;
  return prop * m;
}

Eigen::MatrixXd run_forward(const ModelParams& params, const Features& x,
                            const PropagationMatrix& prop, const DropoutKey& dropout,
                            ForwardCache* cache) {
  if (params.layers.empty()) throw ValidationError("model has no layers");
  if (static_cast<std::size_t>(x.cols()) != params.dims.front()) {
    throw ValidationError(fmt::format("feature dim {} does not match model input dim {}",
                                      x.cols(), params.dims.front()));
  }
  if (params.backbone == Backbone::kGcn && prop.rows() != x.rows()) {
    throw ValidationError(fmt::format("propagation matrix has {} rows, features {}", prop.rows(),
                                      x.rows()));
  }
  if (dropout.rate < 0.0 || dropout.rate >= 1.0) {
    throw ValidationError(fmt::format("dropout rate {} outside [0, 1)", dropout.rate));
  }
  const std::size_t num_layers = params.layers.size();

  Features xd = x;
  if (dropout_active(dropout)) {
    const auto cols = static_cast<std::uint64_t>(x.cols());
    for (Eigen::Index r = 0; r < xd.outerSize(); ++r) {
      for (Features::InnerIterator it(xd, r); it; ++it) {
        it.valueRef() *= keep_scale(dropout, 0,
                                    static_cast<std::uint64_t>(it.row()) * cols +
                                        static_cast<std::uint64_t>(it.col()));
      }
    }
  }
  Eigen::MatrixXd z = propagate(params, prop, xd * params.layers[0].weight);
  add_bias(z, params.layers[0].bias);
  if (cache) {
    cache->dropped_input = std::move(xd);
    cache->pre.push_back(z);
  }
  for (std::size_t l = 1; l < num_layers; ++l) {
    Eigen::MatrixXd h = z.cwiseMax(0.0);
    if (dropout_active(dropout)) {
      Eigen::MatrixXd scale(h.rows(), h.cols());
      const auto cols = static_cast<std::uint64_t>(h.cols());
      for (Eigen::Index i = 0; i < h.rows(); ++i) {
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
          scale(i, j) = keep_scale(dropout, l,
                                   static_cast<std::uint64_t>(i) * cols +
                                       static_cast<std::uint64_t>(j));
        }
      }
      h = h.cwiseProduct(scale);
      if (cache) cache->hidden_scale.push_back(std::move(scale));
    } else if (cache) {
      cache->hidden_scale.push_back(Eigen::MatrixXd::Ones(h.rows(), h.cols()));
    }
    z = propagate(params, prop, h * params.layers[l].weight);
    add_bias(z, params.layers[l].bias);
    if (cache) {
      cache->dropped_hidden.push_back(std::move(h));
      cache->pre.push_back(z);
    }
  }
  return z;
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    p.row(i) = softmax(logits.row(i).transpose()).transpose();
  }
  return p;
}

double eval_accuracy(const Eigen::MatrixXd& logits, const NodeAnnotations& ann,
                     std::span<const NodeId> nodes) {
  if (nodes.empty()) return 0.0;
  std::size_t correct = 0;
  for (const NodeId v : nodes) {
    Eigen::Index best = 0;
    logits.row(v).maxCoeff(&best);
    if (ann.labels.at(v) && static_cast<std::uint32_t>(best) == *ann.labels[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double mean_cross_entropy(const Eigen::MatrixXd& probs,
                          std::span<const std::optional<std::uint32_t>> labels,
                          std::span<const NodeId> nodes) {
  double total = 0.0;
  for (const NodeId v : nodes) total -= std::log(probs(v, static_cast<Eigen::Index>(*labels[v])));
  return nodes.empty() ? 0.0 : total / static_cast<double>(nodes.size());
}

void matrix_to_stream(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << fmt::format("{:.17g}", m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd matrix_from_stream(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                                   const std::string& path) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) throw ParseError(path, 0, "truncated matrix body");
    }
  }
  return m;
}

const char* backbone_name(Backbone b) { return b == Backbone::kGcn ? "gcn" : "mlp"; }
Backbone backbone_from(const std::string& s) {
  if (s == "gcn") return Backbone::kGcn;
  if (s == "mlp") return Backbone::kMlp;
  throw ValidationError(fmt::format("unknown backbone '{}'", s));
}

}  // namespace

PropagationMatrix normalize_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) + 2 * g.num_edges());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    triplets.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
    for (const NodeId u : g.neighbors(v)) triplets.emplace_back(v, u, inv_sqrt[v] * inv_sqrt[u]);
  }
  PropagationMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

ModelParams ModelParams::init(Backbone backbone, std::vector<std::size_t> dims,
                              std::uint64_t seed) {
  if (dims.size() < 2) throw ValidationError("a model needs at least input and output dims");
  ModelParams p;
  p.backbone = backbone;
  p.dims = std::move(dims);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(p.dims[l]);
    const auto out = static_cast<Eigen::Index>(p.dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weight.resize(in, out);
    for (Eigen::Index i = 0; i < in; ++i) {
      for (Eigen::Index j = 0; j < out; ++j) layer.weight(i, j) = rng.uniform(-limit, limit);
    }
    layer.bias = Eigen::RowVectorXd::Zero(out);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return total;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.backbone != b.backbone || a.dims != b.dims || a.layers.size() != b.layers.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].weight != b.layers[l].weight || a.layers[l].bias != b.layers[l].bias) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double entropy(const Eigen::VectorXd& p) noexcept {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return std::max(h, 0.0);
}

double normalized_entropy(const Eigen::VectorXd& p) noexcept {
  if (p.size() < 2) return 0.0;
  return entropy(p) / std::log(static_cast<double>(p.size()));
}

PredictiveState PredictiveState::from_probabilities(Eigen::VectorXd probs) {
  PredictiveState s;
  Eigen::Index best = 0;
  s.top_prob = probs.maxCoeff(&best);
  s.predicted_class = static_cast<std::size_t>(best);
  s.entropy = das::entropy(probs);
  s.normalized_entropy = das::normalized_entropy(probs);
  s.probabilities = std::move(probs);
  return s;
}

Eigen::MatrixXd forward_logits(const ModelParams& params, const Features& x,
                               const PropagationMatrix& prop, const DropoutKey& dropout) {
  return run_forward(params, x, prop, dropout, nullptr);
}

std::vector<PredictiveState> forward(const ModelParams& params, const Features& x,
                                     const PropagationMatrix& prop) {
  const Eigen::MatrixXd probs = row_softmax(forward_logits(params, x, prop));
  std::vector<PredictiveState> out;
  out.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    out.push_back(PredictiveState::from_probabilities(probs.row(i).transpose()));
  }
  return out;
}

double objective_and_gradient(const ModelParams& params, const Features& x,
                              const PropagationMatrix& prop,
                              std::span<const std::optional<std::uint32_t>> labels,
                              std::span<const NodeId> nodes, double weight_decay,
                              const DropoutKey& dropout, ModelParams* grad) {
  if (nodes.empty()) throw ValidationError("training objective needs at least one node");
  for (const NodeId v : nodes) {
    if (v >= labels.size() || !labels[v]) {
      throw ValidationError(fmt::format("training node {} is unlabeled", v));
    }
  }
  ForwardCache cache;
  const Eigen::MatrixXd logits = run_forward(params, x, prop, dropout, grad ? &cache : nullptr);
  const Eigen::MatrixXd probs = row_softmax(logits);
  double loss = mean_cross_entropy(probs, labels, nodes);
  for (const auto& l : params.layers) loss += 0.5 * weight_decay * l.weight.squaredNorm();
  if (!grad) return loss;

  const std::size_t num_layers = params.layers.size();
  *grad = params;
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const double inv = 1.0 / static_cast<double>(nodes.size());
  for (const NodeId v : nodes) {
    dz.row(v) = probs.row(v) * inv;
    dz(v, static_cast<Eigen::Index>(*labels[v])) -= inv;
  }
  for (std::size_t l = num_layers; l-- > 0;) {
    const Eigen::MatrixXd dm =
        params.backbone == Backbone::kGcn ? Eigen::MatrixXd(prop.transpose() * dz) : dz;
    auto& g = grad->layers[l];
    if (l == 0) {
      g.weight = cache.dropped_input.transpose() * dm;
    } else {
      g.weight = cache.dropped_hidden[l - 1].transpose() * dm;
    }
    g.weight += weight_decay * params.layers[l].weight;
    g.bias = dz.colwise().sum();
    if (l > 0) {
      const Eigen::MatrixXd dh =
          (dm * params.layers[l].weight.transpose()).cwiseProduct(cache.hidden_scale[l - 1]);
      const Eigen::MatrixXd& z_prev = cache.pre[l - 1];
      dz = dh.cwiseProduct((z_prev.array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

TrainResult train(const PropagationMatrix& prop, const Features& x,
                  const NodeAnnotations& annotations, const Splits& splits,
                  const TrainConfig& config, const ModelParams* warm_start) {
  if (config.num_layers < 1) throw ValidationError("num_layers must be >= 1");
  if (annotations.num_classes < 1) throw ValidationError("no classes to train on");
  std::vector<std::size_t> dims{static_cast<std::size_t>(x.cols())};
  for (std::size_t l = 1; l < config.num_layers; ++l) dims.push_back(config.hidden_dim);
  dims.push_back(annotations.num_classes);

  ModelParams params = (config.warm_start && warm_start)
                           ? *warm_start
                           : ModelParams::init(config.backbone, dims, config.seed);
  if (params.dims != dims || params.backbone != config.backbone) {
    throw ValidationError("warm-start parameters do not match the configured architecture");
  }

  TrainResult result;
  const std::span<const std::optional<std::uint32_t>> labels(annotations.labels);
  const std::span<const NodeId> train_nodes(splits.train);
  const std::span<const NodeId> val_nodes(splits.validation);

  auto evaluate = [&](std::size_t epoch, const ModelParams& p) {
    const Eigen::MatrixXd logits = forward_logits(p, x, prop);
    const Eigen::MatrixXd probs = row_softmax(logits);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = mean_cross_entropy(probs, labels, train_nodes);
    rec.val_accuracy = eval_accuracy(logits, annotations, val_nodes);
    if (!std::isfinite(rec.train_loss)) {
      throw TrainingError(fmt::format("non-finite training loss at epoch {} (lr={})", epoch,
                                      config.learning_rate));
    }
    return rec;
  };

  result.trace.push_back(evaluate(0, params));
  ModelParams best = params;
  double best_acc = result.trace.back().val_accuracy;
  ModelParams grad;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const DropoutKey key{config.dropout, config.seed, epoch};
    const double loss = objective_and_gradient(params, x, prop, labels, train_nodes,
                                               config.weight_decay, key, &grad);
    if (!std::isfinite(loss)) {
      throw TrainingError(fmt::format("non-finite training objective at epoch {} (lr={})", epoch,
                                      config.learning_rate));
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      params.layers[l].weight -= config.learning_rate * grad.layers[l].weight;
      params.layers[l].bias -= config.learning_rate * grad.layers[l].bias;
    }
    result.trace.push_back(evaluate(epoch, params));
    if (result.trace.back().val_accuracy > best_acc) {
      best_acc = result.trace.back().val_accuracy;
      best = params;
      result.best_epoch = epoch;
    }
  }
  result.params = std::move(best);
  result.predictions = forward(result.params, x, prop);
  return result;
}

double supervised_loss(std::span<const PredictiveState> predictions,
                       const NodeAnnotations& annotations, std::span<const NodeId> nodes) {
  double total = 0.0;
  for (const NodeId v : nodes) {
    const auto& label = annotations.labels.at(v);
    if (!label) throw ValidationError(fmt::format("node {} is unlabeled", v));
    total -= std::log(predictions[v].probabilities(static_cast<Eigen::Index>(*label)));
  }
  return total;
}

double accuracy(std::span<const PredictiveState> predictions, const NodeAnnotations& annotations,
                std::span<const NodeId> nodes) {
  if (nodes.empty()) throw ValidationError("accuracy over an empty node set");
  std::size_t correct = 0;
  for (const NodeId v : nodes) {
    const auto& label = annotations.labels.at(v);
    if (label && predictions[v].predicted_class == *label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

void write_model(const ModelParams& params, const TrainConfig& config,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  const nlohmann::json header = {
      {"backbone", backbone_name(params.backbone)},
      {"dims", params.dims},
      {"config",
       {{"hidden_dim", config.hidden_dim},
        {"num_layers", config.num_layers},
        {"learning_rate", config.learning_rate},
        {"weight_decay", config.weight_decay},
        {"dropout", config.dropout},
        {"max_epochs", config.max_epochs},
        {"seed", config.seed},
        {"backbone", backbone_name(config.backbone)},
        {"warm_start", config.warm_start}}}};
  out << header.dump() << '\n';
  for (const auto& l : params.layers) {
    matrix_to_stream(out, l.weight);
    matrix_to_stream(out, l.bias);
  }
}

ModelParams read_model(const std::filesystem::path& path, TrainConfig* config) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");
  ModelParams p;
  try {
    const auto header = nlohmann::json::parse(line);
    p.backbone = backbone_from(header.at("backbone").get<std::string>());
    p.dims = header.at("dims").get<std::vector<std::size_t>>();
    if (config) {
      const auto& c = header.at("config");
      config->hidden_dim = c.at("hidden_dim").get<std::size_t>();
      config->num_layers = c.at("num_layers").get<std::size_t>();
      config->learning_rate = c.at("learning_rate").get<double>();
      config->weight_decay = c.at("weight_decay").get<double>();
      config->dropout = c.at("dropout").get<double>();
      config->max_epochs = c.at("max_epochs").get<std::size_t>();
      config->seed = c.at("seed").get<std::uint64_t>();
      config->backbone = backbone_from(c.at("backbone").get<std::string>());
      config->warm_start = c.at("warm_start").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
    DenseLayer layer;
    const auto in_dim = static_cast<Eigen::Index>(p.dims[l]);
    const auto out_dim = static_cast<Eigen::Index>(p.dims[l + 1]);
    layer.weight = matrix_from_stream(in, in_dim, out_dim, path.string());
    layer.bias = matrix_from_stream(in, 1, out_dim, path.string());
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace das
