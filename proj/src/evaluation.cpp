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

#include "framing/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace framing {
namespace {

std::vector<std::u32string> token_set(std::u32string_view normalized) {
  auto tokens = split_whitespace(normalized);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

bool acronym_of(std::u32string_view short_norm, std::u32string_view long_norm) {
  const auto tokens = split_whitespace(long_norm);
  if (tokens.size() < 2) return false;
  std::u32string letters;
  for (char32_t c : short_norm) {
    if (c != U' ') letters.push_back(c);
  }
  if (letters.size() != tokens.size()) return false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].front() != letters[i]) return false;
  }
  return true;
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

using DedupKey = std::pair<std::u32string, MainRole>;

}  // namespace

std::string_view match_rule_name(MatchRule rule) {
  switch (rule) {
    case MatchRule::Exact: return "exact";
    case MatchRule::Normalized: return "normalized";
    case MatchRule::Acronym: return "acronym";
    case MatchRule::Substring: return "substring";
    case MatchRule::TokenOverlap: return "token_overlap";
    case MatchRule::CharOverlap: return "char_overlap";
    case MatchRule::None: break;
  }
  return "none";
}

bool is_acronym(std::u32string_view a, std::u32string_view b) {
  const auto na = normalize_text(a);
  const auto nb = normalize_text(b);
  if (na.empty() || nb.empty()) return false;
  return acronym_of(na, nb) || acronym_of(nb, na);
}

MatchRule match_spans(std::u32string_view pred_text, std::size_t pred_start, std::size_t pred_end,
                      MainRole pred_role, std::u32string_view gold_text, std::size_t gold_start,
                      std::size_t gold_end, MainRole gold_role) {
  if (pred_role != gold_role) return MatchRule::None;
  if (pred_start == gold_start && pred_end == gold_end) return MatchRule::Exact;

  const auto np = normalize_text(pred_text);
  const auto ng = normalize_text(gold_text);
  if (!np.empty() && np == ng) return MatchRule::Normalized;
  if (!np.empty() && !ng.empty() && (acronym_of(np, ng) || acronym_of(ng, np))) {
    return MatchRule::Acronym;
  }
  if (np.size() >= kSubstringMinLength && ng.size() >= kSubstringMinLength &&
      (np.find(ng) != std::u32string::npos || ng.find(np) != std::u32string::npos)) {
    return MatchRule::Substring;
  }

  const auto tp = token_set(np);
  const auto tg = token_set(ng);
  if (!tp.empty() && !tg.empty()) {
    std::vector<std::u32string> shared;
    std::set_intersection(tp.begin(), tp.end(), tg.begin(), tg.end(), std::back_inserter(shared));
    const double ratio = static_cast<double>(shared.size()) /
                         static_cast<double>(std::min(tp.size(), tg.size()));
    if (ratio >= kTokenOverlapThreshold) return MatchRule::TokenOverlap;
  }

  const std::size_t shorter = std::min(pred_end - pred_start, gold_end - gold_start);
  const std::size_t lo = std::max(pred_start, gold_start);
  const std::size_t hi = std::min(pred_end, gold_end);
  if (shorter > 0 && hi > lo &&
      static_cast<double>(hi - lo) / static_cast<double>(shorter) >= kCharOverlapThreshold) {
    return MatchRule::CharOverlap;
  }
  return MatchRule::None;
}

SpanPair fuzzy_match(const LabeledSpan& pred, const GoldAnnotation& gold) {
  const MatchRule rule = match_spans(pred.text, pred.start, pred.end, pred.main_role, gold.mention,
                                     gold.start, gold.end, gold.main_role);
  return {pred, gold, rule};
}

std::optional<double> exact_match_accuracy(std::span<const LabeledSpan> preds,
                                           std::span<const GoldAnnotation> golds) {
  DocumentSpans doc{"", {preds.begin(), preds.end()}, {golds.begin(), golds.end()}};
  return exact_match_summary(std::span<const DocumentSpans>(&doc, 1)).accuracy;
}

MatchSummary exact_match_summary(std::span<const DocumentSpans> documents) {
  MatchSummary summary;
  for (const auto& doc : documents) {
    for (const auto& gold : doc.gold) {
      ++summary.gold_spans;
      bool any = false;
      bool exact = false;
      for (const auto& pred : doc.predicted) {
        const MatchRule rule = fuzzy_match(pred, gold).match_rule;
        any = any || rule != MatchRule::None;
        exact = exact || rule == MatchRule::Exact;
      }
      if (any) ++summary.matched;
      if (any && !exact) ++summary.fuzzy_only;
    }
  }
  if (summary.gold_spans > 0) {
    summary.accuracy =
        static_cast<double>(summary.matched) / static_cast<double>(summary.gold_spans);
  }
  return summary;
}

void PrfScores::finalize() {
  precision = safe_div(static_cast<double>(predicted_hit), static_cast<double>(predicted));
  recall = safe_div(static_cast<double>(gold_hit), static_cast<double>(gold));
  f1 = f1_of(precision, recall);
}

SpanPrf dedup_prf(std::span<const DocumentSpans> documents) {
  SpanPrf result;
  for (const auto& doc : documents) {
    std::map<DedupKey, bool> gold_keys;
    std::map<DedupKey, bool> pred_keys;
    for (const auto& gold : doc.gold) {
      if (gold.main_role == MainRole::Unknown) continue;
      gold_keys.emplace(DedupKey{normalize_text(gold.mention), gold.main_role}, false);
    }
    for (const auto& pred : doc.predicted) {
      if (pred.main_role == MainRole::Unknown) continue;
      pred_keys.emplace(DedupKey{normalize_text(pred.text), pred.main_role}, false);
    }
    for (const auto& pred : doc.predicted) {
      if (pred.main_role == MainRole::Unknown) continue;
      for (const auto& gold : doc.gold) {
        if (gold.main_role == MainRole::Unknown || !fuzzy_match(pred, gold).matched()) continue;
        pred_keys[{normalize_text(pred.text), pred.main_role}] = true;
        gold_keys[{normalize_text(gold.mention), gold.main_role}] = true;
      }
    }
    for (const auto& [key, hit] : gold_keys) {
      auto& scores = result.per_role[static_cast<std::size_t>(key.second)];
      ++scores.gold;
      if (hit) ++scores.gold_hit;
    }
    for (const auto& [key, hit] : pred_keys) {
      auto& scores = result.per_role[static_cast<std::size_t>(key.second)];
      ++scores.predicted;
      if (hit) ++scores.predicted_hit;
    }
  }
  for (auto& scores : result.per_role) {
    scores.finalize();
    result.micro.predicted += scores.predicted;
    result.micro.predicted_hit += scores.predicted_hit;
    result.micro.gold += scores.gold;
    result.micro.gold_hit += scores.gold_hit;
    result.macro_precision += scores.precision / 3.0;
    result.macro_recall += scores.recall / 3.0;
    result.macro_f1 += scores.f1 / 3.0;
  }
  result.micro.finalize();
  return result;
}

ClassificationMetrics classification_metrics(std::span<const FineRoleSet> predicted,
                                             std::span<const FineRoleSet> gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("prediction/gold length mismatch: " +
                                std::to_string(predicted.size()) + " vs " +
                                std::to_string(gold.size()));
  }
  ClassificationMetrics m;
  m.instances = gold.size();
  std::size_t recall_hits = 0;
  std::size_t exact_hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    bool intersects = false;
    for (FineRole role : predicted[i]) {
      if (gold[i].count(role)) {
        ++m.per_role[index_of(role)].tp;
        intersects = true;
      } else {
        ++m.per_role[index_of(role)].fp;
      }
    }
    for (FineRole role : gold[i]) {
      if (!predicted[i].count(role)) ++m.per_role[index_of(role)].fn;
    }
    if (intersects) ++recall_hits;
    if (predicted[i] == gold[i]) ++exact_hits;
  }

  std::size_t tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  std::size_t present = 0;
  for (const auto& counts : m.per_role) {
    tp += counts.tp;
    fp += counts.fp;
    fn += counts.fn;
    if (counts.tp + counts.fp + counts.fn == 0) continue;
    const double p = safe_div(static_cast<double>(counts.tp), static_cast<double>(counts.tp + counts.fp));
    const double r = safe_div(static_cast<double>(counts.tp), static_cast<double>(counts.tp + counts.fn));
    macro_sum += f1_of(p, r);
    ++present;
  }
  m.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.micro_f1 = f1_of(m.precision, m.recall);
  m.macro_f1 = safe_div(macro_sum, static_cast<double>(present));
  m.recall_accuracy = safe_div(static_cast<double>(recall_hits), static_cast<double>(m.instances));
  m.exact_match_set_accuracy =
      safe_div(static_cast<double>(exact_hits), static_cast<double>(m.instances));
  return m;
}

OverlapReport overlap_set_eval(std::span<const PipelineDocument> documents) {
  OverlapReport report;
  std::vector<FineRoleSet> predicted;
  std::vector<FineRoleSet> gold;
  for (const auto& doc : documents) {
    for (const auto& g : doc.gold) {
      if (g.main_role == MainRole::Unknown) continue;
      ++report.gold_spans;
      const PipelineEntity* best = nullptr;
      MatchRule best_rule = MatchRule::None;
      for (const auto& entity : doc.predicted) {
        const MatchRule rule = fuzzy_match(entity.span, g).match_rule;
        if (rule < best_rule) {
          best_rule = rule;
          best = &entity;
        }
      }
      if (best == nullptr) continue;
      predicted.push_back(best->fine_roles);
      gold.push_back(g.fine_roles);
    }
  }
  report.overlap = gold.size();
  if (!gold.empty()) report.metrics = classification_metrics(predicted, gold);
  return report;
}

EvaluationReport evaluate_pipeline(std::span<const PipelineDocument> documents) {
  std::vector<DocumentSpans> spans;
  spans.reserve(documents.size());
  for (const auto& doc : documents) {
    DocumentSpans d{doc.article_id, {}, doc.gold};
    for (const auto& entity : doc.predicted) d.predicted.push_back(entity.span);
    spans.push_back(std::move(d));
  }
  EvaluationReport report;
  report.matching = exact_match_summary(spans);
  report.spans = dedup_prf(spans);
  report.classification = overlap_set_eval(documents);
  return report;
}

namespace {

nlohmann::ordered_json prf_json(const PrfScores& s) {
  nlohmann::ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["unique_predicted"] = s.predicted;
  j["unique_gold"] = s.gold;
  j["true_positives"] = s.predicted_hit;
  j["false_positives"] = s.false_positives();
  j["false_negatives"] = s.false_negatives();
  return j;
}

nlohmann::ordered_json classification_json(const ClassificationMetrics& m) {
  nlohmann::ordered_json j;
  j["instances"] = m.instances;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["micro_f1"] = m.micro_f1;
  j["macro_f1"] = m.macro_f1;
  j["recall_accuracy"] = m.recall_accuracy;
  j["exact_match_set_accuracy"] = m.exact_match_set_accuracy;
  auto& roles = j["per_role"] = nlohmann::ordered_json::object();
  for (FineRole role : all_fine_roles()) {
    const auto& c = m.per_role[index_of(role)];
    if (c.tp + c.fp + c.fn == 0) continue;
    roles[std::string(fine_role_name(role))] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
  }
  return j;
}

std::string pct(double value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%5.1f", 100.0 * value);
  return buf;
}

}  // namespace

std::string classification_metrics_json(const ClassificationMetrics& metrics) {
  return classification_json(metrics).dump(2);
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["exact_match_accuracy"] =
      matching.accuracy ? nlohmann::ordered_json(*matching.accuracy) : nlohmann::ordered_json();
  j["gold_spans"] = matching.gold_spans;
  j["matched_spans"] = matching.matched;
  j["fuzzy_only_matches"] = matching.fuzzy_only;
  auto& per_role = j["span_metrics"]["per_role"];
  for (MainRole role : kCanonicalMainRoles) {
    per_role[std::string(main_role_name(role))] =
        prf_json(spans.per_role[static_cast<std::size_t>(role)]);
  }
  j["span_metrics"]["micro"] = prf_json(spans.micro);
  j["span_metrics"]["macro"] = {{"precision", spans.macro_precision},
                                {"recall", spans.macro_recall},
                                {"f1", spans.macro_f1}};
  j["span_metrics"]["micro_f1"] = spans.micro.f1;
  j["span_metrics"]["macro_f1"] = spans.macro_f1;
  auto& cls = j["classification"];
  cls["gold_spans"] = classification.gold_spans;
  cls["overlap"] = classification.overlap;
  cls["empty"] = classification.empty();
  cls["metrics"] = classification.metrics ? classification_json(*classification.metrics)
                                          : nlohmann::ordered_json();
  return j.dump(2);
}

std::string format_classification_row(std::string_view label, const ClassificationMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10.*s %s %s %s %s %s %s\n", static_cast<int>(label.size()),
                label.data(), pct(m.precision).c_str(), pct(m.recall).c_str(),
                pct(m.micro_f1).c_str(), pct(m.macro_f1).c_str(), pct(m.recall_accuracy).c_str(),
                pct(m.exact_match_set_accuracy).c_str());
  return buf;
}

std::string EvaluationReport::format_table() const {
  std::string out;
  char buf[160];
  out += "Span detection (deduplicated)\n";
  out += "Role          Prec   Rec    F1\n";
  for (MainRole role : kCanonicalMainRoles) {
    const auto& s = spans.per_role[static_cast<std::size_t>(role)];
    std::snprintf(buf, sizeof(buf), "%-12s %s %s %s\n", std::string(main_role_name(role)).c_str(),
                  pct(s.precision).c_str(), pct(s.recall).c_str(), pct(s.f1).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-12s %s %s %s\n%-12s %s %s %s\n", "Micro",
                pct(spans.micro.precision).c_str(), pct(spans.micro.recall).c_str(),
                pct(spans.micro.f1).c_str(), "Macro", pct(spans.macro_precision).c_str(),
                pct(spans.macro_recall).c_str(), pct(spans.macro_f1).c_str());
  out += buf;
  if (matching.accuracy) {
    std::snprintf(buf, sizeof(buf), "Exact match: %zu/%zu (%s%%), fuzzy-only %zu\n",
                  matching.matched, matching.gold_spans, pct(*matching.accuracy).c_str(),
                  matching.fuzzy_only);
  } else {
    std::snprintf(buf, sizeof(buf), "Exact match: n/a (no gold spans)\n");
  }
  out += buf;
  out += "\nFine-grained roles (overlap set)\n";
  out += "Set         Prec   Rec    Mic    Mac    Acc    EMC\n";
  if (classification.metrics) {
    out += format_classification_row("All", *classification.metrics);
  } else {
    out += "All        n/a (empty overlap)\n";
  }
  return out;
}

}  // namespace framing
