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

// Chance-level fine-role predictors. Each samples a label count k from the
// training label-count distribution, then picks k roles: uniformly, by
// global frequency rank, or by frequency-weighted sampling without
// replacement. All three are deterministic for a given seed.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "framing/taxonomy.hpp"

namespace framing {

struct LabelCountDistribution {
  // k_probability[k] = P(an instance carries k fine roles); index 0 is unused
  // and always 0. Sums to 1.
  std::vector<double> k_probability;
  // Marginal count of each role over the training instances.
  std::array<double, kNumFineRoles> frequencies{};
};

LabelCountDistribution fit_label_count_distribution(std::span<const FineRoleSet> train_gold);

// Draws k from `dist`, capped at 22 (and, for frequency-weighted sampling,
// at the number of roles with non-zero frequency).
std::size_t sample_label_count(const LabelCountDistribution& dist, std::mt19937_64& rng);

std::vector<FineRoleSet> random_baseline(const LabelCountDistribution& dist,
                                         std::size_t n_instances, std::uint64_t seed);

std::vector<FineRoleSet> topk_baseline(const LabelCountDistribution& dist,
                                       std::span<const double> frequencies,
                                       std::size_t n_instances, std::uint64_t seed);

// Throws std::invalid_argument when every frequency is zero.
std::vector<FineRoleSet> freq_weighted_baseline(const LabelCountDistribution& dist,
                                                std::span<const double> frequencies,
                                                std::size_t n_instances, std::uint64_t seed);

}  // namespace framing
