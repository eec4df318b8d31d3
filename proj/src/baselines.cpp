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

#include "framing/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "framing/random.hpp"

namespace framing {
namespace {

void check_frequencies(std::span<const double> frequencies) {
  if (frequencies.size() != kNumFineRoles) {
    throw std::invalid_argument("expected 22 role frequencies");
  }
}

}  // namespace

LabelCountDistribution fit_label_count_distribution(std::span<const FineRoleSet> train_gold) {
  if (train_gold.empty()) throw std::invalid_argument("empty training annotations");
  LabelCountDistribution dist;
  std::vector<double> counts(2, 0.0);
  for (const auto& roles : train_gold) {
    const std::size_t k = std::min(roles.size(), kNumFineRoles);
    if (k == 0) continue;
    if (counts.size() <= k) counts.resize(k + 1, 0.0);
    counts[k] += 1.0;
    for (FineRole role : roles) dist.frequencies[index_of(role)] += 1.0;
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total == 0.0) throw std::invalid_argument("training annotations carry no fine roles");
  dist.k_probability.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) dist.k_probability[k] = counts[k] / total;
  return dist;
}

std::size_t sample_label_count(const LabelCountDistribution& dist, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last_supported = 1;
  for (std::size_t k = 1; k < dist.k_probability.size(); ++k) {
    if (dist.k_probability[k] <= 0.0) continue;
    last_supported = k;
    cumulative += dist.k_probability[k];
    if (u < cumulative) return std::min(k, kNumFineRoles);
  }
  return std::min(last_supported, kNumFineRoles);
}

std::vector<FineRoleSet> random_baseline(const LabelCountDistribution& dist,
                                         std::size_t n_instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FineRoleSet> out;
  out.reserve(n_instances);
  for (std::size_t i = 0; i < n_instances; ++i) {
    const std::size_t k = sample_label_count(dist, rng);
    std::array<std::size_t, kNumFineRoles> pool;
    std::iota(pool.begin(), pool.end(), 0);
    FineRoleSet roles;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t pick = j + uniform_index(rng, kNumFineRoles - j);
      std::swap(pool[j], pool[pick]);
      roles.insert(fine_role_at(pool[j]));
    }
    out.push_back(std::move(roles));
  }
  return out;
}

std::vector<FineRoleSet> topk_baseline(const LabelCountDistribution& dist,
                                       std::span<const double> frequencies,
                                       std::size_t n_instances, std::uint64_t seed) {
  check_frequencies(frequencies);
  std::array<std::size_t, kNumFineRoles> ranked;
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return frequencies[a] > frequencies[b]; });

  std::mt19937_64 rng(seed);
  std::vector<FineRoleSet> out;
  out.reserve(n_instances);
  for (std::size_t i = 0; i < n_instances; ++i) {
    const std::size_t k = sample_label_count(dist, rng);
    FineRoleSet roles;
    for (std::size_t j = 0; j < k; ++j) roles.insert(fine_role_at(ranked[j]));
    out.push_back(std::move(roles));
  }
  return out;
}

std::vector<FineRoleSet> freq_weighted_baseline(const LabelCountDistribution& dist,
                                                std::span<const double> frequencies,
                                                std::size_t n_instances, std::uint64_t seed) {
  check_frequencies(frequencies);
  const std::size_t supported = static_cast<std::size_t>(
      std::count_if(frequencies.begin(), frequencies.end(), [](double f) { return f > 0.0; }));
  if (supported == 0) throw std::invalid_argument("all role frequencies are zero");

  std::mt19937_64 rng(seed);
  std::vector<FineRoleSet> out;
  out.reserve(n_instances);
  for (std::size_t i = 0; i < n_instances; ++i) {
    const std::size_t k = std::min(sample_label_count(dist, rng), supported);
    std::array<double, kNumFineRoles> weights;
    std::copy(frequencies.begin(), frequencies.end(), weights.begin());
    FineRoleSet roles;
    for (std::size_t j = 0; j < k; ++j) {
      const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
      const double target = uniform01(rng) * total;
      double cumulative = 0.0;
      std::size_t pick = kNumFineRoles;
      for (std::size_t r = 0; r < kNumFineRoles; ++r) {
        if (weights[r] <= 0.0) continue;
        cumulative += weights[r];
        pick = r;
        if (target < cumulative) break;
      }
      roles.insert(fine_role_at(pick));
      weights[pick] = 0.0;
    }
    out.push_back(std::move(roles));
  }
  return out;
}

}  // namespace framing
