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

// First-order linear-chain CRF over BIO tags.
//
// A tag sequence y_0..y_{L-1} scores
//   start[y_0] + sum_t emissions(t, y_t) + sum_t transitions(y_{t-1}, y_t) + end[y_{L-1}]
// Transitions into I-X from anything but B-X / I-X, and starting in I-X, are
// fixed at -inf so every sequence with non-zero probability is BIO-valid.
// All computations run in log space.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "framing/corpus.hpp"
#include "framing/tensor.hpp"

namespace framing {

// Training data that cannot be scored (BIO-invalid gold, out-of-range tags).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CrfParams {
  explicit CrfParams(std::size_t num_tags = kNumTags);

  std::size_t num_tags() const { return start.size(); }

  static bool allowed_transition(std::size_t from, std::size_t to);
  static bool allowed_start(std::size_t to);

  Matrix transitions;  // transitions(from, to)
  std::vector<double> start;
  std::vector<double> end;
  // Added to non-O emission biases when a head is initialized.
  double init_bias = 0.2;
  // Added to non-O emissions before decoding.
  double inference_shift = 1.0;
};

double crf_sequence_score(const Matrix& emissions, const CrfParams& params,
                          std::span<const Tag> tags);

// log Z via the forward algorithm.
double crf_log_partition(const Matrix& emissions, const CrfParams& params);

// log Z - score(gold). Positions with mask == 0 are padding and are dropped
// before scoring; an empty mask means every position is valid. Throws
// DataError for BIO-invalid gold.
double crf_nll(const Matrix& emissions, const CrfParams& params, std::span<const Tag> gold,
               std::span<const std::uint8_t> mask = {});

struct CrfMarginals {
  double log_partition = 0.0;
  Matrix unary;     // P(y_t = j)
  Matrix pairwise;  // sum_t P(y_{t-1} = i, y_t = j)
};

// Forward-backward.
CrfMarginals crf_marginals(const Matrix& emissions, const CrfParams& params);

struct CrfGradient {
  double loss = 0.0;
  Matrix emissions;
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> end;
};

// NLL and its gradient with respect to emissions and CRF parameters
// (expected minus observed feature counts). Forbidden entries get 0.
CrfGradient crf_nll_gradient(const Matrix& emissions, const CrfParams& params,
                             std::span<const Tag> gold);

// Maximum-score sequence; ties go to the lowest tag index.
TagSequence viterbi_decode(const Matrix& emissions, const CrfParams& params);

// Adds `shift` to every non-O column.
Matrix apply_inference_shift(Matrix emissions, double shift = 1.0);

}  // namespace framing
