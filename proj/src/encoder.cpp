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

#include "framing/encoder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "framing/text.hpp"

namespace framing {
namespace {

struct HashTrace {
  std::vector<std::vector<std::uint32_t>> features;
  Matrix pooled;  // summed embeddings, scaled
  Matrix hidden;  // tanh output
};

std::uint64_t fnv1a(char kind, std::u32string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint8_t>(kind));
  for (char32_t c : text) {
    for (int shift = 0; shift < 32; shift += 8) mix(static_cast<std::uint8_t>(c >> shift));
  }
  return h;
}

// Collapses character classes: Xxxx -> Xx, 2024 -> d, U.S. -> X.X.
std::u32string word_shape(std::u32string_view word) {
  std::u32string shape;
  for (char32_t c : word) {
    char32_t s;
    if (c >= U'0' && c <= U'9') {
      s = U'd';
    } else if (is_upper(c)) {
      s = U'X';
    } else if (is_word_char(c)) {
      s = U'x';
    } else {
      s = c;
    }
    if (shape.empty() || shape.back() != s) shape.push_back(s);
  }
  return shape;
}

}  // namespace

HashEmbeddingEncoder::HashEmbeddingEncoder(HashEncoderConfig config)
    : config_(config),
      embeddings_(config.buckets, config.embedding_dim),
      embeddings_grad_(config.buckets, config.embedding_dim),
      projection_(config.embedding_dim, config.hidden_dim) {
  if (config.buckets == 0 || config.embedding_dim == 0 || config.hidden_dim == 0) {
    throw std::invalid_argument("hash encoder dimensions must be positive");
  }
  Rng rng(config.seed);
  for (double& e : embeddings_.data()) e = uniform_real(rng, -0.5, 0.5);
  projection_.initialize(rng);
}

std::vector<std::vector<std::uint32_t>> HashEmbeddingEncoder::features(
    std::span<const std::u32string> tokens) const {
  const std::size_t n = tokens.size();
  std::vector<std::u32string> lower(n);
  for (std::size_t i = 0; i < n; ++i) lower[i] = to_lower(tokens[i]);
  static const std::u32string kBoundary = U"<s>";
  auto at = [&](std::ptrdiff_t i) -> const std::u32string& {
    return i < 0 || i >= static_cast<std::ptrdiff_t>(n) ? kBoundary : lower[static_cast<std::size_t>(i)];
  };

  std::vector<std::vector<std::uint32_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pos = static_cast<std::ptrdiff_t>(i);
    const std::u32string& w = lower[i];
    auto add = [&](char kind, std::u32string_view text) {
      out[i].push_back(static_cast<std::uint32_t>(fnv1a(kind, text) % config_.buckets));
    };
    add('w', w);
    add('s', word_shape(tokens[i]));
    add('p', std::u32string_view(w).substr(0, 3));
    add('x', std::u32string_view(w).substr(w.size() > 3 ? w.size() - 3 : 0));
    add('<', at(pos - 1));
    add('>', at(pos + 1));
    add('[', at(pos - 2));
    add(']', at(pos + 2));
    add('b', U"");
  }
  return out;
}

Matrix HashEmbeddingEncoder::encode(std::span<const std::u32string> tokens, std::any* trace) const {
  const std::size_t d = config_.embedding_dim;
  auto feats = features(tokens);
  Matrix pooled(tokens.size(), d);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto row = pooled.row(i);
    const double scale = 1.0 / std::sqrt(static_cast<double>(feats[i].size()));
    for (auto bucket : feats[i]) {
      const auto e = embeddings_.row(bucket);
      for (std::size_t k = 0; k < d; ++k) row[k] += e[k] * scale;
    }
  }
  Matrix hidden = projection_.forward(pooled);
  for (double& h : hidden.data()) h = std::tanh(h);
  if (trace != nullptr) *trace = HashTrace{std::move(feats), std::move(pooled), hidden};
  return hidden;
}

void HashEmbeddingEncoder::backward(const std::any& trace, const Matrix& grad_output) {
  const auto& t = std::any_cast<const HashTrace&>(trace);
  Matrix grad_pre = grad_output;
  for (std::size_t i = 0; i < grad_pre.data().size(); ++i) {
    const double h = t.hidden.data()[i];
    grad_pre.data()[i] *= 1.0 - h * h;
  }
  const Matrix grad_pooled = projection_.backward(t.pooled, grad_pre);
  const std::size_t d = config_.embedding_dim;
  for (std::size_t i = 0; i < t.features.size(); ++i) {
    const auto g = grad_pooled.row(i);
    const double scale = 1.0 / std::sqrt(static_cast<double>(t.features[i].size()));
    for (auto bucket : t.features[i]) {
      auto eg = embeddings_grad_.row(bucket);
      for (std::size_t k = 0; k < d; ++k) eg[k] += g[k] * scale;
    }
  }
}

std::vector<ParamRef> HashEmbeddingEncoder::parameters() {
  std::vector<ParamRef> params{{"encoder.embeddings", embeddings_.data(), embeddings_grad_.data(), true}};
  for (auto& p : projection_.parameters("encoder.projection")) params.push_back(p);
  return params;
}

std::unique_ptr<TokenEncoder> HashEmbeddingEncoder::clone() const {
  return std::make_unique<HashEmbeddingEncoder>(*this);
}

void HashEmbeddingEncoder::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const nlohmann::json meta = {{"kind", kind()},
                               {"buckets", config_.buckets},
                               {"embedding_dim", config_.embedding_dim},
                               {"hidden_dim", config_.hidden_dim},
                               {"seed", config_.seed}};
  std::ofstream(dir / "encoder.json") << meta.dump(2) << '\n';
  save_tensors(dir / "encoder.bin", {{"embeddings", embeddings_},
                                     {"projection.weight", projection_.weight},
                                     {"projection.bias", projection_.bias}});
}

std::unique_ptr<HashEmbeddingEncoder> HashEmbeddingEncoder::load(const std::filesystem::path& dir,
                                                                 const nlohmann::json& meta) {
  HashEncoderConfig config;
  config.buckets = meta.at("buckets").get<std::size_t>();
  config.embedding_dim = meta.at("embedding_dim").get<std::size_t>();
  config.hidden_dim = meta.at("hidden_dim").get<std::size_t>();
  config.seed = meta.at("seed").get<std::uint64_t>();
  auto encoder = std::make_unique<HashEmbeddingEncoder>(config);
  auto tensors = load_tensors(dir / "encoder.bin");
  auto take = [&](const std::string& name, Matrix& into) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("encoder checkpoint missing " + name);
    if (it->second.rows() != into.rows() || it->second.cols() != into.cols()) {
      throw std::runtime_error("encoder checkpoint shape mismatch for " + name);
    }
    into = std::move(it->second);
  };
  take("embeddings", encoder->embeddings_);
  take("projection.weight", encoder->projection_.weight);
  take("projection.bias", encoder->projection_.bias);
  return encoder;
}

std::unique_ptr<TokenEncoder> load_encoder(const std::filesystem::path& dir) {
  std::ifstream in(dir / "encoder.json");
  if (!in) throw std::runtime_error("missing encoder.json in " + dir.string());
  const auto meta = nlohmann::json::parse(in);
  const auto kind = meta.at("kind").get<std::string>();
  if (kind == "hash-embedding") return HashEmbeddingEncoder::load(dir, meta);
  throw std::runtime_error("unknown encoder kind: " + kind);
}

}  // namespace framing
