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

#include "framing/augmentation.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "framing/evaluation.hpp"
#include "framing/stopwords.hpp"
#include "framing/text.hpp"

namespace framing {
namespace {

bool overlaps(std::size_t a_start, std::size_t a_end, std::size_t b_start, std::size_t b_end) {
  return a_start < b_end && b_start < a_end;
}

bool token_subset(const std::vector<std::u32string>& small, const std::vector<std::u32string>& large) {
  if (small.empty()) return false;
  const std::set<std::u32string> pool(large.begin(), large.end());
  return std::all_of(small.begin(), small.end(), [&](const auto& t) { return pool.contains(t); });
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

bool same_assignment(const GoldAnnotation& a, const GoldAnnotation& b) {
  return a.main_role == b.main_role && a.fine_roles == b.fine_roles;
}

std::string describe(const GoldAnnotation& a) {
  std::string roles = std::string(main_role_name(a.main_role));
  if (!a.fine_roles.empty()) roles += "/" + format_fine_role_list(a.fine_roles);
  return u32_to_utf8(a.mention) + " [" + roles + "]";
}

bool word_boundary(std::u32string_view text, std::size_t start, std::size_t end) {
  const bool left = start == 0 || !is_word_char(text[start - 1]);
  const bool right = end == text.size() || !is_word_char(text[end]);
  return left && right;
}

}  // namespace

bool alias_related(std::u32string_view a, std::u32string_view b) {
  const std::u32string na = normalize_text(a);
  const std::u32string nb = normalize_text(b);
  if (na.empty() || nb.empty()) return false;
  if (na == nb) return true;
  const auto ta = split_whitespace(na);
  const auto tb = split_whitespace(nb);
  if (token_subset(ta, tb) || token_subset(tb, ta)) return true;
  return is_acronym(a, b);
}

std::vector<AliasCluster> build_clusters(std::span<const GoldAnnotation> gold,
                                         std::vector<std::string>* conflicts) {
  const std::size_t n = gold.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::set<std::string> conflict_set;
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i].main_role == MainRole::Unknown) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (gold[j].main_role == MainRole::Unknown) continue;
      if (!alias_related(gold[i].mention, gold[j].mention)) continue;
      if (same_assignment(gold[i], gold[j])) {
        parent[find_root(parent, j)] = find_root(parent, i);
      } else {
        conflict_set.insert(describe(gold[i]) + " vs " + describe(gold[j]));
      }
    }
  }
  std::map<std::size_t, AliasCluster> by_root;
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i].main_role == MainRole::Unknown) continue;
    auto [it, fresh] = by_root.try_emplace(find_root(parent, i));
    AliasCluster& c = it->second;
    if (fresh) {
      c.main_role = gold[i].main_role;
      c.fine_roles = gold[i].fine_roles;
    }
    c.members.insert(gold[i].mention);
    if (gold[i].mention.size() > c.canonical.size()) c.canonical = gold[i].mention;
  }
  std::vector<AliasCluster> clusters;
  for (auto& [root, c] : by_root) clusters.push_back(std::move(c));
  if (conflicts) conflicts->assign(conflict_set.begin(), conflict_set.end());
  return clusters;
}

nlohmann::json PropagationLog::to_json() const {
  nlohmann::json cl = nlohmann::json::array();
  for (const auto& c : clusters) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : c.members) members.push_back(u32_to_utf8(m));
    cl.push_back({{"canonical", u32_to_utf8(c.canonical)},
                  {"members", members},
                  {"main_role", main_role_name(c.main_role)},
                  {"fine_roles", format_fine_role_list(c.fine_roles)}});
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& [s, e] : skipped_ambiguous) skipped.push_back({{"start", s}, {"end", e}});
  return {{"article_id", article_id},
          {"clusters", cl},
          {"added", added},
          {"conflicts", conflicts},
          {"skipped_ambiguous", skipped}};
}

std::vector<GoldAnnotation> propagate_labels(const ArticleDocument& doc,
                                             std::span<const GoldAnnotation> gold,
                                             PropagationLog* log) {
  PropagationLog local;
  PropagationLog& out_log = log ? *log : local;
  out_log.article_id = doc.id;
  out_log.clusters = build_clusters(gold, &out_log.conflicts);

  // Surface patterns, lowercased, per cluster.
  const std::u32string lower_text = to_lower(doc.text);
  std::map<CharSpan, std::set<std::size_t>> hits;
  for (std::size_t c = 0; c < out_log.clusters.size(); ++c) {
    const auto& cluster = out_log.clusters[c];
    std::set<std::u32string> patterns;
    for (const auto& m : cluster.members) patterns.insert(to_lower(trim(m)));
    const Tokenization tok = tokenize(cluster.canonical);
    for (std::size_t k = 1; k < tok.size(); ++k) {
      const auto suffix = std::u32string_view(cluster.canonical).substr(tok[k].start, tok.back().end - tok[k].start);
      if (suffix.size() < 2 || is_punct(suffix.front())) continue;
      if (k + 1 == tok.size() && is_stop_word(suffix, doc.language)) continue;
      patterns.insert(to_lower(suffix));
    }
    for (const auto& p : patterns) {
      if (p.empty()) continue;
      for (std::size_t pos = lower_text.find(p); pos != std::u32string::npos;
           pos = lower_text.find(p, pos + 1)) {
        if (word_boundary(doc.text, pos, pos + p.size())) hits[{pos, pos + p.size()}].insert(c);
      }
    }
  }

  struct Candidate {
    std::size_t start, end, cluster;
  };
  std::vector<Candidate> candidates;
  for (const auto& [range, clusters] : hits) {
    const auto& first = out_log.clusters[*clusters.begin()];
    const bool ambiguous = std::any_of(clusters.begin(), clusters.end(), [&](std::size_t c) {
      return out_log.clusters[c].main_role != first.main_role ||
             out_log.clusters[c].fine_roles != first.fine_roles;
    });
    const bool on_gold = std::any_of(gold.begin(), gold.end(), [&](const GoldAnnotation& g) {
      return overlaps(range.first, range.second, g.start, g.end);
    });
    if (on_gold) continue;
    if (ambiguous) {
      out_log.skipped_ambiguous.push_back(range);
      continue;
    }
    candidates.push_back({range.first, range.second, *clusters.begin()});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const std::size_t la = a.end - a.start, lb = b.end - b.start;
    return la != lb ? la > lb : a.start < b.start;
  });

  std::vector<GoldAnnotation> out(gold.begin(), gold.end());
  std::vector<CharSpan> taken;
  for (const auto& cand : candidates) {
    const bool clash = std::any_of(taken.begin(), taken.end(), [&](const CharSpan& t) {
      return overlaps(cand.start, cand.end, t.first, t.second);
    });
    if (clash) continue;
    taken.emplace_back(cand.start, cand.end);
    const auto& cluster = out_log.clusters[cand.cluster];
    out.push_back({doc.id, doc.text.substr(cand.start, cand.end - cand.start), cand.start, cand.end,
                   cluster.main_role, cluster.fine_roles});
  }
  out_log.added = taken.size();
  std::stable_sort(out.begin(), out.end(),
                   [](const GoldAnnotation& a, const GoldAnnotation& b) { return a.start < b.start; });
  return out;
}

std::vector<CharSpan> CapitalizedSequenceRecognizer::recognize(const ArticleDocument& doc) const {
  const Tokenization tok = tokenize(doc.text);
  std::vector<CharSpan> spans;
  std::size_t i = 0;
  while (i < tok.size()) {
    auto capitalized = [&](std::size_t k) {
      const auto& s = tok[k].surface;
      return !s.empty() && is_upper(s.front()) && is_word_char(s.front());
    };
    if (!capitalized(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    // Runs stop at any gap other than plain spacing between tokens.
    while (j + 1 < tok.size() && capitalized(j + 1) && tok[j].end < tok[j + 1].start) ++j;
    std::size_t first = i;
    while (first <= j && is_stop_word(tok[first].surface, doc.language)) ++first;
    if (first <= j) spans.emplace_back(tok[first].start, tok[j].end);
    i = j + 1;
  }
  return spans;
}

std::vector<GoldAnnotation> add_unknown(const ArticleDocument& doc,
                                        std::span<const GoldAnnotation> annotations,
                                        std::span<const CharSpan> ner_spans) {
  std::vector<GoldAnnotation> out(annotations.begin(), annotations.end());
  for (const auto& [start, end] : ner_spans) {
    if (start >= end || end > doc.text.size()) continue;
    const bool clash = std::any_of(out.begin(), out.end(), [&](const GoldAnnotation& a) {
      return overlaps(start, end, a.start, a.end);
    });
    if (clash) continue;
    out.push_back({doc.id, doc.text.substr(start, end - start), start, end, MainRole::Unknown, {}});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GoldAnnotation& a, const GoldAnnotation& b) { return a.start < b.start; });
  return out;
}

nlohmann::json AugmentationResult::to_json() const {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : documents) docs.push_back(d.to_json());
  return {{"gold", gold}, {"propagated", propagated}, {"unknown", unknown}, {"documents", docs}};
}

AugmentationResult augment_dataset(const Dataset& data, const EntityRecognizer* recognizer) {
  AugmentationResult result;
  for (const auto& entry : data) {
    PropagationLog log;
    auto annotations = propagate_labels(entry.document, entry.annotations, &log);
    result.gold += entry.annotations.size();
    result.propagated += log.added;
    if (recognizer != nullptr) {
      const std::size_t before = annotations.size();
      annotations = add_unknown(entry.document, annotations, recognizer->recognize(entry.document));
      result.unknown += annotations.size() - before;
    }
    result.data.push_back({entry.document, std::move(annotations)});
    result.documents.push_back(std::move(log));
  }
  return result;
}

}  // namespace framing
