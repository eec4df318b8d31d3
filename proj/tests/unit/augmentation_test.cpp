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

#include <random>

#include "doctest.h"

#include "framing/augmentation.hpp"
#include "framing/text.hpp"
#include "synthetic.hpp"

using namespace framing;
using namespace framing::testing;

namespace {

GoldAnnotation at(const ArticleDocument& doc, std::u32string_view mention, std::size_t occurrence,
                  MainRole main, FineRoleSet fine) {
  std::size_t pos = doc.text.find(mention);
  for (std::size_t k = 0; k < occurrence; ++k) pos = doc.text.find(mention, pos + 1);
  REQUIRE(pos != std::u32string::npos);
  return {doc.id, std::u32string(mention), pos, pos + mention.size(), main, std::move(fine)};
}

bool no_overlaps(const std::vector<GoldAnnotation>& anns) {
  for (std::size_t i = 0; i < anns.size(); ++i) {
    for (std::size_t j = i + 1; j < anns.size(); ++j) {
      if (anns[i].start < anns[j].end && anns[j].start < anns[i].end) return false;
    }
  }
  return true;
}

bool contains(const std::vector<GoldAnnotation>& haystack, const GoldAnnotation& needle) {
  return std::find(haystack.begin(), haystack.end(), needle) != haystack.end();
}

}  // namespace

TEST_CASE("alias_related") {
  CHECK(alias_related(U"Volodymyr Zelensky", U"Zelensky"));
  CHECK(alias_related(U"Zelensky", U"Volodymyr Zelensky"));
  CHECK(alias_related(U"UN", U"United Nations"));
  CHECK(alias_related(U"the Kremlin", U"Kremlin"));
  CHECK(alias_related(U"U.S.", U"us"));
  CHECK_FALSE(alias_related(U"Zelensky", U"Putin"));
  CHECK_FALSE(alias_related(U"", U"Putin"));
  CHECK_FALSE(alias_related(U"UN", U"Ukraine"));
}

TEST_CASE("propagation adds later alias mentions") {
  const auto doc = make_document(
      "EN_UA_0001.txt",
      U"Volodymyr Zelensky spoke on Monday. Later, Zelensky met troops. Zelensky's aides agreed.");
  const std::vector<GoldAnnotation> gold{
      at(doc, U"Volodymyr Zelensky", 0, MainRole::Protagonist, {FineRole::Guardian})};
  PropagationLog log;
  const auto out = propagate_labels(doc, gold, &log);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == gold[0]);
  CHECK(out[1].start == 43);
  CHECK(out[1].end == 51);
  CHECK(out[2].start == 64);
  for (const auto& a : out) {
    CHECK(a.main_role == MainRole::Protagonist);
    CHECK(a.fine_roles == FineRoleSet{FineRole::Guardian});
    CHECK(a.mention == doc.text.substr(a.start, a.end - a.start));
  }
  CHECK(log.added == 2);
  REQUIRE(log.clusters.size() == 1);
  CHECK(log.clusters[0].canonical == U"Volodymyr Zelensky");
}

TEST_CASE("propagation leaves a single mention alone") {
  const auto doc = make_document("EN_UA_0002.txt", U"NATO held a summit.");
  const std::vector<GoldAnnotation> gold{at(doc, U"NATO", 0, MainRole::Protagonist, {FineRole::Guardian})};
  CHECK(propagate_labels(doc, gold) == gold);
}

TEST_CASE("propagation respects word boundaries and existing spans") {
  const auto doc = make_document("EN_UA_0003.txt", U"The US and the USSR. US officials. President Biden of the US.");
  const std::vector<GoldAnnotation> gold{
      at(doc, U"US", 0, MainRole::Protagonist, {FineRole::Guardian}),
      at(doc, U"President Biden of the US", 0, MainRole::Protagonist, {FineRole::Guardian})};
  const auto out = propagate_labels(doc, gold);
  CHECK(no_overlaps(out));
  // Only "US officials" is new: "USSR" is not word-bounded and the last "US"
  // sits inside a gold span.
  REQUIRE(out.size() == 3);
  CHECK(out[1].mention == U"US");
  CHECK(out[1].start == 21);
}

TEST_CASE("conflicting clusters skip shared occurrences") {
  const auto doc = make_document("EN_UA_0004.txt", U"Joe Smith met Anna Smith. Smith said no.");
  const std::vector<GoldAnnotation> gold{
      at(doc, U"Joe Smith", 0, MainRole::Protagonist, {FineRole::Guardian}),
      at(doc, U"Anna Smith", 0, MainRole::Antagonist, {FineRole::Tyrant})};
  PropagationLog log;
  const auto out = propagate_labels(doc, gold, &log);
  CHECK(out == gold);
  REQUIRE(log.skipped_ambiguous.size() == 1);
  CHECK(log.skipped_ambiguous[0] == CharSpan{26, 31});
  CHECK(log.to_json()["skipped_ambiguous"].size() == 1);
}

TEST_CASE("alias-related gold with different roles is flagged") {
  std::vector<std::string> conflicts;
  const auto doc = make_document("EN_UA_0005.txt", U"Zelensky spoke. Volodymyr Zelensky wept.");
  const std::vector<GoldAnnotation> gold{
      at(doc, U"Zelensky", 0, MainRole::Protagonist, {FineRole::Guardian}),
      at(doc, U"Volodymyr Zelensky", 0, MainRole::Innocent, {FineRole::Victim})};
  const auto clusters = build_clusters(gold, &conflicts);
  CHECK(clusters.size() == 2);
  CHECK(conflicts.size() == 1);
}

TEST_CASE("propagation invariants on synthetic documents") {
  const Dataset data = synthetic_dataset(15, 21);
  for (const auto& entry : data) {
    // Keep only the first mention of every entity as gold.
    std::vector<GoldAnnotation> first;
    for (const auto& a : entry.annotations) {
      const bool seen = std::any_of(first.begin(), first.end(),
                                    [&](const GoldAnnotation& f) { return f.mention == a.mention; });
      if (!seen) first.push_back(a);
    }
    const auto out = propagate_labels(entry.document, first);
    CHECK(no_overlaps(out));
    for (const auto& g : first) CHECK(contains(out, g));
    for (const auto& a : out) {
      const bool conserved = std::any_of(first.begin(), first.end(), [&](const GoldAnnotation& g) {
        return g.main_role == a.main_role && g.fine_roles == a.fine_roles;
      });
      CHECK(conserved);
      CHECK_NOTHROW(validate_annotation(entry.document, a));
    }
    // Every full annotation is recovered.
    for (const auto& a : entry.annotations) CHECK(contains(out, a));
  }
}

TEST_CASE("add_unknown") {
  const auto doc = make_document("EN_UA_0006.txt", U"NATO met officials in Brussels on Monday.");
  const std::vector<GoldAnnotation> gold{at(doc, U"NATO", 0, MainRole::Protagonist, {FineRole::Guardian})};
  const std::vector<CharSpan> ner{{0, 4}, {22, 30}, {2, 6}};
  const auto out = add_unknown(doc, gold, ner);
  REQUIRE(out.size() == 2);
  CHECK(out[1].mention == U"Brussels");
  CHECK(out[1].main_role == MainRole::Unknown);
  CHECK(out[1].fine_roles.empty());
  CHECK(add_unknown(doc, gold, {}) == gold);
}

TEST_CASE("capitalized sequence recognizer") {
  const auto doc = make_document("EN_UA_0007.txt", U"The European Union met Volodymyr Zelensky in Kyiv. It rained.");
  CapitalizedSequenceRecognizer ner;
  const auto spans = ner.recognize(doc);
  std::vector<std::u32string> surfaces;
  for (const auto& [s, e] : spans) surfaces.push_back(doc.text.substr(s, e - s));
  CHECK(surfaces == std::vector<std::u32string>{U"European Union", U"Volodymyr Zelensky", U"Kyiv"});
}

TEST_CASE("augment_dataset counts") {
  const auto doc = make_document("EN_UA_0008.txt", U"Volodymyr Zelensky visited Brussels. Zelensky left.");
  const Dataset data{{doc, {at(doc, U"Volodymyr Zelensky", 0, MainRole::Protagonist, {FineRole::Guardian})}}};
  const auto propagated = augment_dataset(data);
  CHECK(propagated.gold == 1);
  CHECK(propagated.propagated == 1);
  CHECK(propagated.unknown == 0);
  CapitalizedSequenceRecognizer ner;
  const auto with_unknown = augment_dataset(data, &ner);
  CHECK(with_unknown.unknown == 1);
  CHECK(with_unknown.data[0].annotations.size() == 3);
  CHECK(with_unknown.to_json()["documents"].size() == 1);
}
