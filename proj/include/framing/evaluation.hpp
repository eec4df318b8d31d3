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

// Span-level and fine-role evaluation.
//
// A predicted span matches a gold span when the main roles agree and the
// first of these rules fires:
//   exact          identical offsets
//   normalized     equal after lowercasing, punctuation removal and
//                  whitespace collapsing
//   acronym        one is the ordered initials of the other's tokens
//   substring      one normalized surface contains the other, both >= 3 chars
//   token_overlap  shared tokens >= 67% of the smaller token set
//   char_overlap   shared offsets >= 80% of the shorter span
//
// Span P/R/F1 are deduplicated per document on (normalized surface, role):
// each key contributes at most one true positive and one false positive.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "framing/corpus.hpp"
#include "framing/taxonomy.hpp"
#include "framing/text.hpp"

namespace framing {

enum class MatchRule { Exact, Normalized, Acronym, Substring, TokenOverlap, CharOverlap, None };

std::string_view match_rule_name(MatchRule rule);

inline constexpr double kTokenOverlapThreshold = 0.67;
inline constexpr double kCharOverlapThreshold = 0.80;
inline constexpr std::size_t kSubstringMinLength = 3;

struct SpanPair {
  LabeledSpan predicted;
  GoldAnnotation gold;
  MatchRule match_rule = MatchRule::None;

  bool matched() const { return match_rule != MatchRule::None; }
};

// True iff the shorter surface's letters equal the ordered initials of the
// longer surface's tokens (case-insensitive, longer has >= 2 tokens).
bool is_acronym(std::u32string_view a, std::u32string_view b);

// Rule evaluation on raw surfaces and offsets; both spans from one document.
MatchRule match_spans(std::u32string_view pred_text, std::size_t pred_start, std::size_t pred_end,
                      MainRole pred_role, std::u32string_view gold_text, std::size_t gold_start,
                      std::size_t gold_end, MainRole gold_role);

SpanPair fuzzy_match(const LabeledSpan& pred, const GoldAnnotation& gold);

struct DocumentSpans {
  std::string article_id;
  std::vector<LabeledSpan> predicted;
  std::vector<GoldAnnotation> gold;
};

struct MatchSummary {
  std::size_t gold_spans = 0;
  std::size_t matched = 0;
  std::size_t fuzzy_only = 0;  // matched, but by no exact-offset prediction
  // nullopt when there are no gold spans.
  std::optional<double> accuracy;
};

// Fraction of gold spans matched by at least one prediction.
std::optional<double> exact_match_accuracy(std::span<const LabeledSpan> preds,
                                           std::span<const GoldAnnotation> golds);
MatchSummary exact_match_summary(std::span<const DocumentSpans> documents);

struct PrfScores {
  std::size_t predicted = 0;       // unique predicted keys
  std::size_t predicted_hit = 0;   // unique predicted keys matching a gold span
  std::size_t gold = 0;            // unique gold keys
  std::size_t gold_hit = 0;        // unique gold keys matched by a prediction
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::size_t false_positives() const { return predicted - predicted_hit; }
  std::size_t false_negatives() const { return gold - gold_hit; }
  void finalize();
};

struct SpanPrf {
  std::array<PrfScores, 3> per_role;  // indexed by MainRole
  PrfScores micro;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

SpanPrf dedup_prf(std::span<const DocumentSpans> documents);

struct RoleCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ClassificationMetrics {
  std::size_t instances = 0;
  double precision = 0.0;
  double recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double recall_accuracy = 0.0;
  double exact_match_set_accuracy = 0.0;
  std::array<RoleCounts, kNumFineRoles> per_role{};
};

// Multi-label metrics over the 22 fine roles. Macro-F1 averages over roles
// present in gold or predictions.
ClassificationMetrics classification_metrics(std::span<const FineRoleSet> predicted,
                                             std::span<const FineRoleSet> gold);

struct PipelineEntity {
  LabeledSpan span;
  FineRoleSet fine_roles;
};

struct PipelineDocument {
  std::string article_id;
  std::vector<PipelineEntity> predicted;
  std::vector<GoldAnnotation> gold;
};

struct OverlapReport {
  std::size_t gold_spans = 0;
  std::size_t overlap = 0;
  std::optional<ClassificationMetrics> metrics;  // nullopt when the overlap is empty

  bool empty() const { return overlap == 0; }
};

// Restricts to gold spans matched by some prediction and scores the matched
// prediction's fine roles against the gold ones. The best-ranked rule wins
// when several predictions match; earlier predictions win ties.
OverlapReport overlap_set_eval(std::span<const PipelineDocument> documents);

struct EvaluationReport {
  MatchSummary matching;
  SpanPrf spans;
  OverlapReport classification;

  std::string to_json() const;
  // Plain-text tables: per-role span P/R/F1 plus classifier metrics.
  std::string format_table() const;
};

EvaluationReport evaluate_pipeline(std::span<const PipelineDocument> documents);

std::string classification_metrics_json(const ClassificationMetrics& metrics);
std::string format_classification_row(std::string_view label, const ClassificationMetrics& m);

}  // namespace framing
