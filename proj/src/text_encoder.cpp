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
#include "das/text_encoder.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "das/error.hpp"

namespace das {

std::vector<TextEmbedding> TextEncoder::encode_batch(std::span<const std::string> texts) const {
  std::vector<TextEmbedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode(t));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void normalize_in_place(Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) noexcept {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

HashEncoder::HashEncoder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("encoder dim must be >= 1");
}

TextEmbedding HashEncoder::encode(std::string_view text) const {
  TextEmbedding v = TextEmbedding::Zero(static_cast<Eigen::Index>(dim_));
  const auto tokens = tokenize(text);
  if (tokens.empty()) {
    spdlog::debug("encoding empty text as the zero vector");
    return v;
  }
  for (const auto& tok : tokens) v(static_cast<Eigen::Index>(bucket(tok))) += 1.0;
  normalize_in_place(v);
  return v;
}

RemoteEncoder::RemoteEncoder(EncoderBackend config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 64))) {
  if (!config_.endpoint) throw ValidationError("remote encoder requires an endpoint");
  if (config_.dim == 0) throw ValidationError("encoder dim must be >= 1");
  endpoint_ = parse_endpoint(*config_.endpoint);
}

TextEmbedding RemoteEncoder::encode(std::string_view text) const {
  const std::string owned(text);
  return request(std::span<const std::string>(&owned, 1), 0).front();
}

std::vector<TextEmbedding> RemoteEncoder::encode_batch(std::span<const std::string> texts) const {
  std::vector<TextEmbedding> out;
  out.reserve(texts.size());
  const std::size_t step = std::max<std::size_t>(config_.batch_size, 1);
  for (std::size_t i = 0; i < texts.size(); i += step) {
    auto part = request(texts.subspan(i, std::min(step, texts.size() - i)), i);
    for (auto& v : part) out.push_back(std::move(v));
  }
  return out;
}

std::vector<TextEmbedding> RemoteEncoder::request(std::span<const std::string> texts,
                                                  std::size_t first_index) const {
  const nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  nlohmann::json payload = body;
  if (config_.model_name) payload["model"] = *config_.model_name;
  std::map<std::string, std::string> headers;
  if (config_.api_key) headers["Authorization"] = "Bearer " + *config_.api_key;

  in_flight_.acquire();
  const auto result = post_json(endpoint_, payload.dump(), headers,
                                std::chrono::milliseconds(config_.timeout_ms));
  in_flight_.release();

  const std::string context =
      fmt::format("texts {}..{}", first_index, first_index + texts.size() - 1);
  if (result.status == 0) {
    throw EncoderError(fmt::format("encoder transport failure for {}: {}", context,
                                   result.transport_error));
  }
  if (result.status < 200 || result.status >= 300) {
    throw EncoderError(fmt::format("encoder returned HTTP {} for {}", result.status, context));
  }
  std::vector<TextEmbedding> out;
  try {
    const auto j = nlohmann::json::parse(result.body);
    const auto& rows = j.at("embeddings");
    if (rows.size() != texts.size()) {
      throw EncoderError(fmt::format("encoder returned {} embeddings for {} texts ({})",
                                     rows.size(), texts.size(), context));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto values = rows[i].get<std::vector<double>>();
      if (values.size() != config_.dim) {
        throw EncoderError(fmt::format("dimension mismatch for text {}: got {}, expected {}",
                                       first_index + i, values.size(), config_.dim));
      }
      TextEmbedding v = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                          static_cast<Eigen::Index>(values.size()));
      if (texts[i].empty()) {
        spdlog::warn("encoding empty text {} as the zero vector", first_index + i);
        v.setZero();
      }
      normalize_in_place(v);
      out.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw EncoderError(fmt::format("malformed encoder response for {}: {}", context, e.what()));
  }
  return out;
}

EncoderBackend encoder_backend_from_env(EncoderBackend base) {
  if (const char* ep = std::getenv("DAS_ENCODER_ENDPOINT"); ep && *ep) base.endpoint = ep;
  if (const char* key = std::getenv("DAS_ENCODER_API_KEY"); key && *key) base.api_key = key;
  return base;
}

std::unique_ptr<TextEncoder> make_encoder(const EncoderBackend& backend) {
  switch (backend.kind) {
    case EncoderKind::kDeterministicHash: return std::make_unique<HashEncoder>(backend.dim);
    case EncoderKind::kRemoteService: return std::make_unique<RemoteEncoder>(backend);
  }
  throw ValidationError("unknown encoder kind");
}

Eigen::SparseMatrix<double, Eigen::RowMajor> stack_features(std::span<const TextEmbedding> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dim = rows.empty() ? 0 : rows.front().size();
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.size() != dim) throw ValidationError("feature rows differ in dimension");
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (r(j) != 0.0) triplets.emplace_back(i, j, r(j));
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(n, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace das
