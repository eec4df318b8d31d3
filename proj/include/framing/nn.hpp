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

// Small training toolkit: parameter views, AdamW, learning-rate schedules,
// a dense layer, dropout and a binary tensor archive.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "framing/random.hpp"
#include "framing/tensor.hpp"

namespace framing {

// A trainable tensor seen as flat value/gradient views. The owner keeps both
// buffers alive and unresized while the view is in use.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
  bool decay = true;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled weight decay Adam. Entries whose value is non-finite (the -inf
// BIO constraints) are never touched.
class AdamW {
 public:
  AdamW(std::vector<ParamRef> params, AdamWConfig config = {});

  // Applies one update with learning rate `lr` and clears the gradients.
  void step(double lr);
  void zero_grad();
  std::size_t steps() const { return steps_; }

 private:
  std::vector<ParamRef> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t steps_ = 0;
};

// Linear warm-up over the first `warmup_fraction` of steps, then cosine decay
// to zero.
double cosine_schedule(std::size_t step, std::size_t total_steps, double peak_lr,
                       double warmup_fraction);
// Linear decay from peak_lr to zero.
double linear_schedule(std::size_t step, std::size_t total_steps, double peak_lr);

// y = x W + b with W stored in x in_dim by out_dim.
struct Linear {
  Linear() = default;
  Linear(std::size_t in_dim, std::size_t out_dim);

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }

  // Uniform in +-1/sqrt(in_dim), bias zero.
  void initialize(Rng& rng);
  Matrix forward(const Matrix& x) const;
  // Accumulates parameter gradients; returns d loss / d x.
  Matrix backward(const Matrix& x, const Matrix& grad_out);
  std::vector<ParamRef> parameters(const std::string& prefix);

  Matrix weight, bias;  // bias is 1 x out_dim
  Matrix weight_grad, bias_grad;
};

// Inverted dropout. Returns the keep mask scaled by 1/(1-rate), or an empty
// matrix when rate is 0.
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);
void apply_mask(Matrix& x, const Matrix& mask);

Matrix matmul(const Matrix& a, const Matrix& b);

// Named matrices stored as little-endian float64 with a short header.
using TensorArchive = std::map<std::string, Matrix>;
void save_tensors(const std::filesystem::path& path, const TensorArchive& tensors);
TensorArchive load_tensors(const std::filesystem::path& path);

}  // namespace framing
