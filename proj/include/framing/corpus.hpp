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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "framing/taxonomy.hpp"

namespace framing {

struct ArticleDocument {
  std::string id;
  std::string language;    // bg, en, hi, pt, ru or "other"
  std::string domain_tag;  // e.g. "UA-war", "climate"; may be empty
  std::u32string text;
};

// Character offsets are code points; `end` is exclusive.
struct GoldAnnotation {
  std::string article_id;
  std::u32string mention;
  std::size_t start = 0;
  std::size_t end = 0;
  MainRole main_role = MainRole::Protagonist;
  FineRoleSet fine_roles;

  bool operator==(const GoldAnnotation&) const = default;
};

// A predicted span. `confidence` is in [0, 1].
struct LabeledSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::u32string text;
  MainRole main_role = MainRole::Protagonist;
  double confidence = 1.0;

  bool operator==(const LabeledSpan&) const = default;
};

struct Token {
  std::u32string surface;
  std::size_t start = 0;
  std::size_t end = 0;
};

using Tokenization = std::vector<Token>;

// BIO tags. The first seven form the standard tag set; B/I-Unknown extend it
// for the Unknown-augmented variant. O is always column 0.
enum class Tag : std::uint8_t {
  O = 0,
  BProtagonist, IProtagonist,
  BAntagonist, IAntagonist,
  BInnocent, IInnocent,
  BUnknown, IUnknown,
};

using TagSequence = std::vector<Tag>;

inline constexpr std::size_t kNumTags = 7;
inline constexpr std::size_t kNumTagsWithUnknown = 9;

inline constexpr std::size_t tag_index(Tag tag) { return static_cast<std::size_t>(tag); }
Tag tag_at(std::size_t index);
inline constexpr bool is_begin(Tag tag) { return tag != Tag::O && tag_index(tag) % 2 == 1; }
inline constexpr bool is_inside(Tag tag) { return tag != Tag::O && tag_index(tag) % 2 == 0; }
Tag begin_tag(MainRole role);
Tag inside_tag(MainRole role);
// Role carried by a non-O tag.
MainRole tag_role(Tag tag);
std::string_view tag_name(Tag tag);
Tag parse_tag(std::string_view name);

// True when no I-X follows anything but B-X or I-X.
bool is_bio_valid(std::span<const Tag> tags);
// Rewrites orphan I-X tags to B-X. Returns the number of repairs.
std::size_t repair_bio(TagSequence& tags);

// Splits on Unicode whitespace and peels leading/trailing punctuation into
// one-character tokens. Punctuation inside a word ("U.S.A") stays attached.
Tokenization tokenize(std::u32string_view text);

// Counts gathered while converting gold spans to BIO tags.
struct ConversionReport {
  std::size_t annotations = 0;
  std::size_t converted = 0;
  std::size_t dropped_overlap = 0;
  std::size_t skipped_no_token = 0;
  std::size_t repaired_tags = 0;
  std::vector<std::string> warnings;

  ConversionReport& operator+=(const ConversionReport& other);
  std::string to_json() const;
};

// Overlapping gold spans keep the longest (earlier start on ties). Spans
// touching no token are skipped and recorded in `report`.
TagSequence to_bio(const ArticleDocument& doc, std::span<const GoldAnnotation> annotations,
                   const Tokenization& tok, ConversionReport* report = nullptr);

// Maximal B-X (I-X)* runs become spans; orphan I-X opens a new span. When
// `token_confidence` is given, a span's confidence is the mean over its tokens,
// otherwise 1.0.
std::vector<LabeledSpan> spans_from_bio(std::span<const Tag> tags, const Tokenization& tok,
                                        std::u32string_view text,
                                        std::span<const double> token_confidence = {});

struct DatasetEntry {
  ArticleDocument document;
  std::vector<GoldAnnotation> annotations;
};

using Dataset = std::vector<DatasetEntry>;

class DatasetError : public ValidationError {
 public:
  DatasetError(const std::string& article_id, std::size_t row, const std::string& what);
  const std::string& article_id() const { return article_id_; }
  std::size_t row() const { return row_; }

 private:
  std::string article_id_;
  std::size_t row_;
};

// Checks offsets, mention/slice agreement and role consistency. Empty fine
// roles are legal only for Unknown.
void validate_annotation(const ArticleDocument& doc, const GoldAnnotation& annotation);

// ISO 639-1 code from a shared-task style id ("EN_UA_0001.txt" -> "en").
std::string language_from_id(std::string_view article_id);
// "UA" -> "UA-war", "CC" -> "climate" from the second id segment.
std::string domain_from_id(std::string_view article_id);

ArticleDocument make_document(std::string id, std::u32string text);

// One annotation row per line: article_id, mention, start, end, main_role,
// fine_roles (comma-separated) and, for predictions, a trailing confidence.
struct AnnotationRow {
  GoldAnnotation annotation;
  std::optional<double> confidence;
  std::size_t line = 0;
};

std::vector<AnnotationRow> read_annotation_rows(const std::filesystem::path& tsv);
void write_annotations_tsv(const std::filesystem::path& tsv,
                           std::span<const GoldAnnotation> annotations,
                           std::span<const double> confidences = {});

// Reads every article referenced by the TSV from `articles_dir` (named by
// article_id) plus any other *.txt present, and validates each row.
Dataset load_dataset(const std::filesystem::path& articles_dir,
                     const std::filesystem::path& annotations_file);

std::u32string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view utf8);

}  // namespace framing
