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
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "das/http.hpp"

namespace das {

/// Unit-norm (or all-zero for empty text) embedding of a description.
using TextEmbedding = Eigen::VectorXd;

enum class EncoderKind { kDeterministicHash, kRemoteService };

struct EncoderBackend {
  EncoderKind kind = EncoderKind::kDeterministicHash;
  std::size_t dim = 4096;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_name;
  std::optional<std::string> api_key;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  int timeout_ms = 30000;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::size_t dim() const noexcept = 0;
  virtual TextEmbedding encode(std::string_view text) const = 0;
  virtual std::vector<TextEmbedding> encode_batch(std::span<const std::string> texts) const;
};

/// Lowercased ASCII alphanumeric runs; every other byte separates tokens.
std::vector<std::string> tokenize(std::string_view text);
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Bag of hashed tokens (FNV-1a, bucket = hash mod dim), L2-normalized.
class HashEncoder final : public TextEncoder {
 public:
  explicit HashEncoder(std::size_t dim = 4096);
  std::size_t dim() const noexcept override { return dim_; }
  TextEmbedding encode(std::string_view text) const override;
  std::size_t bucket(std::string_view token) const noexcept { return fnv1a64(token) % dim_; }

 private:
  std::size_t dim_;
};

/// POSTs {"texts": [...]} and expects {"embeddings": [[...], ...]}.
class RemoteEncoder final : public TextEncoder {
 public:
  explicit RemoteEncoder(EncoderBackend config);
  std::size_t dim() const noexcept override { return config_.dim; }
  TextEmbedding encode(std::string_view text) const override;
  std::vector<TextEmbedding> encode_batch(std::span<const std::string> texts) const override;

 private:
  std::vector<TextEmbedding> request(std::span<const std::string> texts,
                                     std::size_t first_index) const;

  EncoderBackend config_;
  Endpoint endpoint_;
  mutable std::counting_semaphore<64> in_flight_;
};

/// Applies DAS_ENCODER_ENDPOINT / DAS_ENCODER_API_KEY when set.
EncoderBackend encoder_backend_from_env(EncoderBackend base);
std::unique_ptr<TextEncoder> make_encoder(const EncoderBackend& backend);

/// Scales to unit L2 norm; zero vectors are returned unchanged.
void normalize_in_place(Eigen::VectorXd& v);
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) noexcept;

/// Row-stacks embeddings into a sparse feature matrix (exact zeros dropped).
Eigen::SparseMatrix<double, Eigen::RowMajor> stack_features(
    std::span<const TextEmbedding> rows);

}  // namespace das
