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

// Training-data variants built from gold annotations: propagation of gold
// roles to later alias mentions in the same document, and Unknown spans for
// entities the annotators left unlabeled.

#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "framing/corpus.hpp"

namespace framing {

// After normalize_text: equal, one token set a subset of the other, or one
// an acronym of the other.
bool alias_related(std::u32string_view a, std::u32string_view b);

struct AliasCluster {
  std::u32string canonical;  // longest member, earliest on ties
  std::set<std::u32string> members;
  MainRole main_role = MainRole::Protagonist;
  FineRoleSet fine_roles;
};

// Alias-connected gold mentions sharing one (main, fine) assignment.
// Alias-related mentions with different assignments land in separate
// clusters and are reported in `conflicts` when given.
std::vector<AliasCluster> build_clusters(std::span<const GoldAnnotation> gold,
                                         std::vector<std::string>* conflicts = nullptr);

struct PropagationLog {
  std::string article_id;
  std::vector<AliasCluster> clusters;
  std::size_t added = 0;
  std::vector<std::string> conflicts;
  std::vector<std::pair<std::size_t, std::size_t>> skipped_ambiguous;
  nlohmann::json to_json() const;
};

// Returns gold plus one annotation per further word-bounded, case-insensitive
// occurrence of a cluster member or a suffix of a canonical form. Added spans
// never overlap each other or gold; occurrences claimed by clusters with
// different roles are skipped. Sorted by start.
std::vector<GoldAnnotation> propagate_labels(const ArticleDocument& doc,
                                             std::span<const GoldAnnotation> gold,
                                             PropagationLog* log = nullptr);

using CharSpan = std::pair<std::size_t, std::size_t>;

// Text to candidate entity spans.
class EntityRecognizer {
 public:
  virtual ~EntityRecognizer() = default;
  virtual std::vector<CharSpan> recognize(const ArticleDocument& doc) const = 0;
};

// Maximal runs of capitalized tokens with leading stop words removed.
class CapitalizedSequenceRecognizer final : public EntityRecognizer {
 public:
  std::vector<CharSpan> recognize(const ArticleDocument& doc) const override;
};

// Adds every span not overlapping an existing or previously added annotation
// as Unknown with no fine roles. Sorted by start.
std::vector<GoldAnnotation> add_unknown(const ArticleDocument& doc,
                                        std::span<const GoldAnnotation> annotations,
                                        std::span<const CharSpan> ner_spans);

struct AugmentationResult {
  Dataset data;
  std::size_t gold = 0;
  std::size_t propagated = 0;
  std::size_t unknown = 0;
  std::vector<PropagationLog> documents;
  nlohmann::json to_json() const;
};

// Propagates every document and, when `recognizer` is set, adds Unknown spans.
AugmentationResult augment_dataset(const Dataset& data, const EntityRecognizer* recognizer = nullptr);

}  // namespace framing
