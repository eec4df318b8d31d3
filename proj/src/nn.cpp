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

#include "framing/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace framing {

static_assert(std::endian::native == std::endian::little, "tensor archives assume little-endian");

AdamW::AdamW(std::vector<ParamRef> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    if (p.value.size() != p.grad.size()) throw std::invalid_argument("gradient shape mismatch: " + p.name);
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    const double decay = p.decay ? lr * config_.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (!std::isfinite(p.value[i])) continue;
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double update = (m[i] / correction1) / (std::sqrt(v[i] / correction2) + config_.eps);
      p.value[i] -= decay * p.value[i] + lr * update;
    }
  }
  zero_grad();
}

void AdamW::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

double cosine_schedule(std::size_t step, std::size_t total_steps, double peak_lr,
                       double warmup_fraction) {
  if (total_steps == 0) return peak_lr;
  const auto warmup = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
  if (step < warmup) return peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const std::size_t decay_steps = std::max<std::size_t>(total_steps - warmup, 1);
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(decay_steps));
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double linear_schedule(std::size_t step, std::size_t total_steps, double peak_lr) {
  if (total_steps == 0) return peak_lr;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return peak_lr * (1.0 - progress);
}

Linear::Linear(std::size_t in_dim, std::size_t out_dim)
    : weight(in_dim, out_dim), bias(1, out_dim), weight_grad(in_dim, out_dim), bias_grad(1, out_dim) {}

void Linear::initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  for (double& w : weight.data()) w = uniform_real(rng, -bound, bound);
  std::fill(bias.data().begin(), bias.data().end(), 0.0);
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = matmul(x, weight);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += bias(0, c);
  }
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& grad_out) {
  const std::size_t in = in_dim(), out = out_dim();
  Matrix grad_in(x.rows(), in);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto g = grad_out.row(r);
    const auto xr = x.row(r);
    auto gi = grad_in.row(r);
    for (std::size_t c = 0; c < out; ++c) bias_grad(0, c) += g[c];
    for (std::size_t i = 0; i < in; ++i) {
      const auto w = weight.row(i);
      auto wg = weight_grad.row(i);
      double acc = 0.0;
      for (std::size_t c = 0; c < out; ++c) {
        wg[c] += xr[i] * g[c];
        acc += w[c] * g[c];
      }
      gi[i] = acc;
    }
  }
  return grad_in;
}

std::vector<ParamRef> Linear::parameters(const std::string& prefix) {
  return {{prefix + ".weight", weight.data(), weight_grad.data(), true},
          {prefix + ".bias", bias.data(), bias_grad.data(), false}};
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (rate <= 0.0) return {};
  const double keep = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  for (double& m : mask.data()) m = uniform01(rng) < rate ? 0.0 : keep;
  return mask;
}

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.data().size(); ++i) x.data()[i] *= mask.data()[i];
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double x = a(r, k);
      if (x == 0.0) continue;
      const auto br = b.row(k);
      for (std::size_t c = 0; c < b.cols(); ++c) o[c] += x * br[c];
    }
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'F', 'R', 'M', 'T', 'N', 'S', 'R', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated tensor archive");
  return value;
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const TensorArchive& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint64_t>(out, tensors.size());
  for (const auto& [name, m] : tensors) {
    write_pod<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint64_t>(out, m.rows());
    write_pod<std::uint64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TensorArchive load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw std::runtime_error("not a tensor archive: " + path.string());
  }
  TensorArchive tensors;
  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = read_pod<std::uint64_t>(in);
    if (name_len > 4096) throw std::runtime_error("corrupt tensor archive");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    if (rows != 0 && cols > (std::uint64_t{1} << 40) / rows) throw std::runtime_error("corrupt tensor archive");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated tensor archive");
    tensors.emplace(std::move(name), std::move(m));
  }
  return tensors;
}

}  // namespace framing
