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

#include <cmath>
#include <random>

#include "doctest.h"

#include "framing/crf.hpp"
#include "oracles.hpp"

using namespace framing;
using namespace framing::testing;

namespace {

TagSequence to_tags(const std::vector<std::size_t>& indices) {
  TagSequence out;
  for (auto i : indices) out.push_back(tag_at(i));
  return out;
}

}  // namespace

TEST_CASE("constructor forbids orphan inside tags") {
  CrfParams params;
  CHECK(params.num_tags() == 7);
  CHECK(std::isinf(params.start[tag_index(Tag::IProtagonist)]));
  CHECK(params.start[tag_index(Tag::BProtagonist)] == 0.0);
  CHECK(std::isinf(params.transitions(tag_index(Tag::O), tag_index(Tag::IAntagonist))));
  CHECK(std::isinf(params.transitions(tag_index(Tag::BProtagonist), tag_index(Tag::IAntagonist))));
  CHECK(params.transitions(tag_index(Tag::BAntagonist), tag_index(Tag::IAntagonist)) == 0.0);
  CHECK(params.transitions(tag_index(Tag::IAntagonist), tag_index(Tag::IAntagonist)) == 0.0);
  CHECK(params.transitions(tag_index(Tag::IAntagonist), tag_index(Tag::BInnocent)) == 0.0);
  CHECK(CrfParams(9).num_tags() == 9);
  CHECK_THROWS_AS(CrfParams(10), std::invalid_argument);
}

TEST_CASE("single token with two tags and zero scores has loss ln 2") {
  CrfParams params(2);
  Matrix emissions(1, 2);
  const TagSequence gold{Tag::O};
  CHECK(crf_nll(emissions, params, gold) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("forward partition matches enumeration") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t length = 1 + trial % 5;
    auto [emissions, params] = random_crf_instance(rng, length, 7);
    const double brute = brute_force_log_partition(emissions, params);
    CHECK(crf_log_partition(emissions, params) == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("sequence probabilities sum to one") {
  std::mt19937_64 rng(11);
  for (std::size_t length = 1; length <= 4; ++length) {
    auto [emissions, params] = random_crf_instance(rng, length, 7);
    double total = 0.0;
    for_each_sequence(length, 7, [&](const std::vector<std::size_t>& indices) {
      const TagSequence tags = to_tags(indices);
      if (!is_bio_valid(tags)) return;
      total += std::exp(-crf_nll(emissions, params, tags));
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("loss is strictly positive for random finite inputs") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto [emissions, params] = random_crf_instance(rng, 1 + trial % 6, 7);
    const TagSequence gold = viterbi_decode(emissions, params);
    CHECK(crf_nll(emissions, params, gold) > 0.0);
  }
}

TEST_CASE("peaked emissions give near-zero loss") {
  // Gap of 10 between the gold tag and every other tag at each position.
  const TagSequence gold{Tag::BAntagonist, Tag::IAntagonist, Tag::O, Tag::BInnocent, Tag::O};
  Matrix emissions(gold.size(), 7);
  for (std::size_t t = 0; t < gold.size(); ++t) emissions(t, tag_index(gold[t])) = 10.0;
  CrfParams params;
  const double loss = crf_nll(emissions, params, gold);
  const double brute = brute_force_log_partition(emissions, params) - 50.0;
  CHECK(loss == doctest::Approx(brute).epsilon(1e-9));
  CHECK(loss < 0.01);
}

TEST_CASE("invalid gold raises a data error") {
  CrfParams params;
  Matrix emissions(2, 7);
  const TagSequence orphan{Tag::IProtagonist, Tag::O};
  CHECK_THROWS_AS(crf_nll(emissions, params, orphan), DataError);
  const TagSequence crossed{Tag::BProtagonist, Tag::IAntagonist};
  CHECK_THROWS_AS(crf_nll(emissions, params, crossed), DataError);
  const TagSequence unknown{Tag::BUnknown, Tag::IUnknown};
  CHECK_THROWS_AS(crf_nll(emissions, params, unknown), DataError);
  CHECK_NOTHROW(crf_nll(Matrix(2, 9), CrfParams(9), unknown));
}

TEST_CASE("padding positions are excluded from the loss") {
  std::mt19937_64 rng(17);
  auto [emissions, params] = random_crf_instance(rng, 3, 7);
  const TagSequence gold{Tag::BProtagonist, Tag::IProtagonist, Tag::O};
  Matrix padded(5, 7);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 7; ++j) padded(t, j) = emissions(t, j);
  }
  for (std::size_t j = 0; j < 7; ++j) padded(3, j) = padded(4, j) = 50.0 * static_cast<double>(j);
  TagSequence padded_gold = gold;
  padded_gold.push_back(Tag::O);
  padded_gold.push_back(Tag::O);
  const std::vector<std::uint8_t> mask{1, 1, 1, 0, 0};
  CHECK(crf_nll(padded, params, padded_gold, mask) ==
        doctest::Approx(crf_nll(emissions, params, gold)).epsilon(1e-12));
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    auto [emissions, params] = random_crf_instance(rng, 4, 7, 1.0);
    const TagSequence gold{Tag::O, Tag::BInnocent, Tag::IInnocent, Tag::BAntagonist};
    const CrfGradient grad = crf_nll_gradient(emissions, params, gold);
    CHECK(grad.loss == doctest::Approx(crf_nll(emissions, params, gold)).epsilon(1e-12));
    const double h = 1e-6;
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t j = 0; j < 7; ++j) {
        Matrix plus = emissions, minus = emissions;
        plus(t, j) += h;
        minus(t, j) -= h;
        const double numeric =
            (crf_nll(plus, params, gold) - crf_nll(minus, params, gold)) / (2 * h);
        CHECK(grad.emissions(t, j) == doctest::Approx(numeric).epsilon(1e-5));
      }
    }
    for (std::size_t i = 0; i < 7; ++i) {
      for (std::size_t j = 0; j < 7; ++j) {
        if (!std::isfinite(params.transitions(i, j))) {
          CHECK(grad.transitions(i, j) == 0.0);
          continue;
        }
        CrfParams plus = params, minus = params;
        plus.transitions(i, j) += h;
        minus.transitions(i, j) -= h;
        const double numeric =
            (crf_nll(emissions, plus, gold) - crf_nll(emissions, minus, gold)) / (2 * h);
        CHECK(grad.transitions(i, j) == doctest::Approx(numeric).epsilon(1e-5));
      }
      if (std::isfinite(params.start[i])) {
        CrfParams plus = params, minus = params;
        plus.start[i] += h;
        minus.start[i] -= h;
        CHECK(grad.start[i] == doctest::Approx((crf_nll(emissions, plus, gold) -
                                                crf_nll(emissions, minus, gold)) / (2 * h))
                                   .epsilon(1e-5));
      }
      CrfParams plus = params, minus = params;
      plus.end[i] += h;
      minus.end[i] -= h;
      CHECK(grad.end[i] ==
            doctest::Approx((crf_nll(emissions, plus, gold) - crf_nll(emissions, minus, gold)) /
                            (2 * h))
                .epsilon(1e-5));
    }
  }
}

TEST_CASE("marginals are distributions") {
  std::mt19937_64 rng(23);
  auto [emissions, params] = random_crf_instance(rng, 6, 7);
  const CrfMarginals m = crf_marginals(emissions, params);
  for (std::size_t t = 0; t < 6; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 7; ++j) sum += m.unary(t, j);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(m.unary(0, tag_index(Tag::IProtagonist)) == 0.0);
}

TEST_CASE("viterbi equals exhaustive argmax") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t length = 1 + trial % 6;
    auto [emissions, params] = random_crf_instance(rng, length, 7);
    const TagSequence decoded = viterbi_decode(emissions, params);
    CHECK(decoded == to_tags(brute_force_argmax(emissions, params)));
    CHECK(is_bio_valid(decoded));
  }
}

TEST_CASE("viterbi with zero transitions is the per-token argmax") {
  Matrix emissions(3, 7);
  emissions(0, 1) = 5.0;
  emissions(1, 2) = 5.0;
  emissions(2, 0) = 5.0;
  const TagSequence expected{Tag::BProtagonist, Tag::IProtagonist, Tag::O};
  CHECK(viterbi_decode(emissions, CrfParams()) == expected);
}

TEST_CASE("viterbi never starts with an inside tag") {
  Matrix emissions(2, 7);
  emissions(0, tag_index(Tag::IProtagonist)) = 20.0;
  const TagSequence decoded = viterbi_decode(emissions, CrfParams());
  CHECK(decoded[0] != Tag::IProtagonist);
  CHECK(is_bio_valid(decoded));
}

TEST_CASE("viterbi breaks ties toward the lowest tag index") {
  Matrix emissions(2, 7);
  CHECK(viterbi_decode(emissions, CrfParams()) == TagSequence{Tag::O, Tag::O});
}

TEST_CASE("inference shift") {
  Matrix m(1, 7);
  m(0, 0) = 0.5;
  m(0, tag_index(Tag::BInnocent)) = 0.2;
  const Matrix shifted = apply_inference_shift(m);
  CHECK(shifted(0, 0) == 0.5);
  CHECK(shifted(0, tag_index(Tag::BInnocent)) == doctest::Approx(1.2));

  const Matrix zeros = apply_inference_shift(Matrix(2, 7));
  for (std::size_t j = 1; j < 7; ++j) CHECK(zeros(1, j) == 1.0);
  CHECK(zeros(1, 0) == 0.0);

  // O at 0.6 beats B-Antagonist at 0.0 until the shift lifts it to 1.0.
  Matrix marginal(1, 7, -5.0);
  marginal(0, 0) = 0.6;
  marginal(0, tag_index(Tag::BAntagonist)) = 0.0;
  CrfParams params;
  CHECK(viterbi_decode(marginal, params) == TagSequence{Tag::O});
  CHECK(viterbi_decode(apply_inference_shift(marginal), params) == TagSequence{Tag::BAntagonist});
}

TEST_CASE("inference shift preserves order among non-O tags") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix m(1, 7);
    for (std::size_t j = 0; j < 7; ++j) m(0, j) = u(rng);
    const Matrix s = apply_inference_shift(m);
    for (std::size_t a = 1; a < 7; ++a) {
      for (std::size_t b = 1; b < 7; ++b) CHECK((m(0, a) < m(0, b)) == (s(0, a) < s(0, b)));
    }
  }
}
