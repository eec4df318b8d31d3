// Copyright 2026 The Entity Framing Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <any>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "framing/nn.hpp"

namespace framing {

// Maps a token window to one fixed-width vector per token. Implementations
// must be deterministic in evaluation mode and safe to call concurrently
// through the const interface.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;

  // rows == tokens.size(). When `trace` is given it receives the state
  // backward() needs for this call.
  virtual Matrix encode(std::span<const std::u32string> tokens, std::any* trace = nullptr) const = 0;
  // Accumulates parameter gradients for a previous encode() call.
  virtual void backward(const std::any& trace, const Matrix& grad_output) = 0;

  virtual std::vector<ParamRef> parameters() = 0;
  virtual std::unique_ptr<TokenEncoder> clone() const = 0;

  // Writes encoder.json plus any weight files into `dir`.
  virtual void save(const std::filesystem::path& dir) const = 0;
};

struct HashEncoderConfig {
  std::size_t buckets = 16384;
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 64;
  std::uint64_t seed = 42;
};

// Desk-scale encoder: hashed lexical features (word, shape, affixes and a
// +-2 word window) summed into an embedding, followed by a tanh projection.
// Embeddings and projection are both trainable.
class HashEmbeddingEncoder final : public TokenEncoder {
 public:
  explicit HashEmbeddingEncoder(HashEncoderConfig config = {});

  std::string kind() const override { return "hash-embedding"; }
  std::size_t dim() const override { return config_.hidden_dim; }
  const HashEncoderConfig& config() const { return config_; }

  Matrix encode(std::span<const std::u32string> tokens, std::any* trace = nullptr) const override;
  void backward(const std::any& trace, const Matrix& grad_output) override;
  std::vector<ParamRef> parameters() override;
  std::unique_ptr<TokenEncoder> clone() const override;
  void save(const std::filesystem::path& dir) const override;

  static std::unique_ptr<HashEmbeddingEncoder> load(const std::filesystem::path& dir,
                                                    const nlohmann::json& meta);

  // Feature bucket ids of every token; exposed for tests.
  std::vector<std::vector<std::uint32_t>> features(std::span<const std::u32string> tokens) const;

 private:
  HashEncoderConfig config_;
  Matrix embeddings_, embeddings_grad_;
  Linear projection_;
};

// Reads encoder.json in `dir` and dispatches on its "kind".
std::unique_ptr<TokenEncoder> load_encoder(const std::filesystem::path& dir);

}  // namespace framing
