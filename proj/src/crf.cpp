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

#include "framing/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace framing {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shape(const Matrix& emissions, const CrfParams& params) {
  if (emissions.cols() != params.num_tags()) {
    throw std::invalid_argument("emission width " + std::to_string(emissions.cols()) +
                                " does not match " + std::to_string(params.num_tags()) + " tags");
  }
}

void check_gold(std::span<const Tag> gold, std::size_t num_tags) {
  for (Tag tag : gold) {
    if (tag_index(tag) >= num_tags) {
      throw DataError("gold tag " + std::string(tag_name(tag)) + " outside the tag set");
    }
  }
  if (!is_bio_valid(gold)) throw DataError("gold tag sequence is not BIO-valid");
}

// alpha(t, j) = log sum over prefixes ending in j at t.
Matrix forward(const Matrix& emissions, const CrfParams& params) {
  const std::size_t length = emissions.rows();
  const std::size_t tags = params.num_tags();
  Matrix alpha(length, tags, kNegInf);
  std::vector<double> scratch(tags);
  for (std::size_t j = 0; j < tags; ++j) alpha(0, j) = params.start[j] + emissions(0, j);
  for (std::size_t t = 1; t < length; ++t) {
    for (std::size_t j = 0; j < tags; ++j) {
      for (std::size_t i = 0; i < tags; ++i) scratch[i] = alpha(t - 1, i) + params.transitions(i, j);
      alpha(t, j) = log_sum_exp(scratch) + emissions(t, j);
    }
  }
  return alpha;
}

// beta(t, i) = log sum over suffixes after position t given y_t = i.
Matrix backward(const Matrix& emissions, const CrfParams& params) {
  const std::size_t length = emissions.rows();
  const std::size_t tags = params.num_tags();
  Matrix beta(length, tags, kNegInf);
  std::vector<double> scratch(tags);
  for (std::size_t j = 0; j < tags; ++j) beta(length - 1, j) = params.end[j];
  for (std::size_t t = length - 1; t-- > 0;) {
    for (std::size_t i = 0; i < tags; ++i) {
      for (std::size_t j = 0; j < tags; ++j) {
        scratch[j] = params.transitions(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = log_sum_exp(scratch);
    }
  }
  return beta;
}

double finish(const Matrix& alpha, const CrfParams& params) {
  const std::size_t last = alpha.rows() - 1;
  std::vector<double> scratch(params.num_tags());
  for (std::size_t j = 0; j < scratch.size(); ++j) scratch[j] = alpha(last, j) + params.end[j];
  return log_sum_exp(scratch);
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  double max = kNegInf;
  for (double v : values) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

CrfParams::CrfParams(std::size_t num_tags)
    : transitions(num_tags, num_tags, 0.0), start(num_tags, 0.0), end(num_tags, 0.0) {
  if (num_tags == 0 || num_tags > kNumTagsWithUnknown) {
    throw std::invalid_argument("CRF supports 1 to 9 tags");
  }
  for (std::size_t to = 0; to < num_tags; ++to) {
    if (!allowed_start(to)) start[to] = kNegInf;
    for (std::size_t from = 0; from < num_tags; ++from) {
      if (!allowed_transition(from, to)) transitions(from, to) = kNegInf;
    }
  }
}

bool CrfParams::allowed_transition(std::size_t from, std::size_t to) {
  const Tag target = tag_at(to);
  if (!is_inside(target)) return true;
  const MainRole role = tag_role(target);
  return tag_at(from) == begin_tag(role) || tag_at(from) == inside_tag(role);
}

bool CrfParams::allowed_start(std::size_t to) { return !is_inside(tag_at(to)); }

double crf_sequence_score(const Matrix& emissions, const CrfParams& params,
                          std::span<const Tag> tags) {
  if (tags.empty()) return 0.0;
  double score = params.start[tag_index(tags[0])] + emissions(0, tag_index(tags[0]));
  for (std::size_t t = 1; t < tags.size(); ++t) {
    score += params.transitions(tag_index(tags[t - 1]), tag_index(tags[t])) +
             emissions(t, tag_index(tags[t]));
  }
  return score + params.end[tag_index(tags.back())];
}

double crf_log_partition(const Matrix& emissions, const CrfParams& params) {
  check_shape(emissions, params);
  if (emissions.rows() == 0) return 0.0;
  return finish(forward(emissions, params), params);
}

double crf_nll(const Matrix& emissions, const CrfParams& params, std::span<const Tag> gold,
               std::span<const std::uint8_t> mask) {
  check_shape(emissions, params);
  if (gold.size() != emissions.rows()) throw std::invalid_argument("gold/emission length mismatch");
  if (!mask.empty() && mask.size() != gold.size()) {
    throw std::invalid_argument("mask length mismatch");
  }

  const Matrix* scored = &emissions;
  Matrix compact;
  TagSequence kept;
  if (!mask.empty()) {
    const auto valid = static_cast<std::size_t>(std::count_if(
        mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
    compact = Matrix(valid, emissions.cols());
    kept.reserve(valid);
    std::size_t row = 0;
    for (std::size_t t = 0; t < gold.size(); ++t) {
      if (mask[t] == 0) continue;
      std::copy(emissions.row(t).begin(), emissions.row(t).end(), compact.row(row).begin());
      kept.push_back(gold[t]);
      ++row;
    }
    scored = &compact;
    gold = kept;
  }

  check_gold(gold, params.num_tags());
  if (gold.empty()) return 0.0;
  const double nll = crf_log_partition(*scored, params) - crf_sequence_score(*scored, params, gold);
  return std::max(nll, 0.0);
}

CrfMarginals crf_marginals(const Matrix& emissions, const CrfParams& params) {
  check_shape(emissions, params);
  const std::size_t length = emissions.rows();
  const std::size_t tags = params.num_tags();
  CrfMarginals out;
  out.unary = Matrix(length, tags);
  out.pairwise = Matrix(tags, tags);
  if (length == 0) return out;

  const Matrix alpha = forward(emissions, params);
  const Matrix beta = backward(emissions, params);
  out.log_partition = finish(alpha, params);
  const double log_z = out.log_partition;
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t j = 0; j < tags; ++j) {
      const double v = alpha(t, j) + beta(t, j) - log_z;
      out.unary(t, j) = v == kNegInf ? 0.0 : std::exp(v);
    }
  }
  for (std::size_t t = 1; t < length; ++t) {
    for (std::size_t i = 0; i < tags; ++i) {
      if (alpha(t - 1, i) == kNegInf) continue;
      for (std::size_t j = 0; j < tags; ++j) {
        const double v = alpha(t - 1, i) + params.transitions(i, j) + emissions(t, j) +
                         beta(t, j) - log_z;
        if (v != kNegInf) out.pairwise(i, j) += std::exp(v);
      }
    }
  }
  return out;
}

CrfGradient crf_nll_gradient(const Matrix& emissions, const CrfParams& params,
                             std::span<const Tag> gold) {
  check_shape(emissions, params);
  if (gold.size() != emissions.rows()) throw std::invalid_argument("gold/emission length mismatch");
  check_gold(gold, params.num_tags());
  const std::size_t tags = params.num_tags();

  CrfGradient grad;
  grad.start.assign(tags, 0.0);
  grad.end.assign(tags, 0.0);
  grad.transitions = Matrix(tags, tags);
  grad.emissions = Matrix(emissions.rows(), tags);
  if (gold.empty()) return grad;

  const CrfMarginals marginals = crf_marginals(emissions, params);
  grad.loss = std::max(marginals.log_partition - crf_sequence_score(emissions, params, gold), 0.0);
  grad.emissions = marginals.unary;
  grad.transitions = marginals.pairwise;
  for (std::size_t j = 0; j < tags; ++j) {
    grad.start[j] = marginals.unary(0, j);
    grad.end[j] = marginals.unary(gold.size() - 1, j);
  }
  for (std::size_t t = 0; t < gold.size(); ++t) {
    grad.emissions(t, tag_index(gold[t])) -= 1.0;
    if (t > 0) grad.transitions(tag_index(gold[t - 1]), tag_index(gold[t])) -= 1.0;
  }
  grad.start[tag_index(gold.front())] -= 1.0;
  grad.end[tag_index(gold.back())] -= 1.0;
  return grad;
}

TagSequence viterbi_decode(const Matrix& emissions, const CrfParams& params) {
  check_shape(emissions, params);
  const std::size_t length = emissions.rows();
  const std::size_t tags = params.num_tags();
  if (length == 0) return {};

  std::vector<double> score(tags);
  std::vector<double> next(tags);
  std::vector<std::size_t> backpointers((length - 1) * tags, 0);
  for (std::size_t j = 0; j < tags; ++j) score[j] = params.start[j] + emissions(0, j);

  for (std::size_t t = 1; t < length; ++t) {
    for (std::size_t j = 0; j < tags; ++j) {
      double best = kNegInf;
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < tags; ++i) {
        const double s = score[i] + params.transitions(i, j);
        if (s > best) {
          best = s;
          best_i = i;
        }
      }
      next[j] = best + emissions(t, j);
      backpointers[(t - 1) * tags + j] = best_i;
    }
    std::swap(score, next);
  }

  double best = kNegInf;
  std::size_t last = 0;
  for (std::size_t j = 0; j < tags; ++j) {
    const double s = score[j] + params.end[j];
    if (s > best) {
      best = s;
      last = j;
    }
  }

  TagSequence path(length);
  path[length - 1] = tag_at(last);
  for (std::size_t t = length - 1; t > 0; --t) {
    last = backpointers[(t - 1) * tags + last];
    path[t - 1] = tag_at(last);
  }
  return path;
}

Matrix apply_inference_shift(Matrix emissions, double shift) {
  for (std::size_t t = 0; t < emissions.rows(); ++t) {
    for (std::size_t j = 1; j < emissions.cols(); ++j) emissions(t, j) += shift;
  }
  return emissions;
}

}  // namespace framing
