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

#include "framing/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "framing/text.hpp"

namespace framing {
namespace {

constexpr std::array<std::string_view, kNumTagsWithUnknown> kTagNames = {
    "O",          "B-Protagonist", "I-Protagonist", "B-Antagonist", "I-Antagonist",
    "B-Innocent", "I-Innocent",    "B-Unknown",     "I-Unknown",
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

std::size_t parse_offset(std::string_view field, const std::string& article_id, std::size_t row) {
  field = trim_ascii(field);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DatasetError(article_id, row, "invalid offset '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

Tag tag_at(std::size_t index) {
  if (index >= kNumTagsWithUnknown) throw std::out_of_range("tag index out of range");
  return static_cast<Tag>(index);
}

Tag begin_tag(MainRole role) { return static_cast<Tag>(1 + 2 * static_cast<std::size_t>(role)); }
Tag inside_tag(MainRole role) { return static_cast<Tag>(2 + 2 * static_cast<std::size_t>(role)); }

MainRole tag_role(Tag tag) {
  if (tag == Tag::O) throw std::invalid_argument("O carries no role");
  return static_cast<MainRole>((tag_index(tag) - 1) / 2);
}

std::string_view tag_name(Tag tag) { return kTagNames[tag_index(tag)]; }

Tag parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return static_cast<Tag>(i);
  }
  throw ValidationError("unknown tag: " + std::string(name));
}

bool is_bio_valid(std::span<const Tag> tags) {
  Tag previous = Tag::O;
  for (Tag tag : tags) {
    if (is_inside(tag)) {
      const MainRole role = tag_role(tag);
      if (previous != begin_tag(role) && previous != inside_tag(role)) return false;
    }
    previous = tag;
  }
  return true;
}

std::size_t repair_bio(TagSequence& tags) {
  std::size_t repairs = 0;
  Tag previous = Tag::O;
  for (Tag& tag : tags) {
    if (is_inside(tag)) {
      const MainRole role = tag_role(tag);
      if (previous != begin_tag(role) && previous != inside_tag(role)) {
        tag = begin_tag(role);
        ++repairs;
      }
    }
    previous = tag;
  }
  return repairs;
}

Tokenization tokenize(std::u32string_view text) {
  Tokenization tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t chunk_end = i;
    while (chunk_end < n && !is_space(text[chunk_end])) ++chunk_end;

    std::size_t core_begin = i;
    std::size_t core_end = chunk_end;
    while (core_begin < core_end && is_punct(text[core_begin])) ++core_begin;
    while (core_end > core_begin && is_punct(text[core_end - 1])) --core_end;

    for (std::size_t p = i; p < core_begin; ++p) {
      tokens.push_back({std::u32string(1, text[p]), p, p + 1});
    }
    if (core_end > core_begin) {
      tokens.push_back(
          {std::u32string(text.substr(core_begin, core_end - core_begin)), core_begin, core_end});
    }
    for (std::size_t p = std::max(core_end, core_begin); p < chunk_end; ++p) {
      tokens.push_back({std::u32string(1, text[p]), p, p + 1});
    }
    i = chunk_end;
  }
  return tokens;
}

ConversionReport& ConversionReport::operator+=(const ConversionReport& other) {
  annotations += other.annotations;
  converted += other.converted;
  dropped_overlap += other.dropped_overlap;
  skipped_no_token += other.skipped_no_token;
  repaired_tags += other.repaired_tags;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  return *this;
}

std::string ConversionReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["annotations"] = annotations;
  doc["converted"] = converted;
  doc["dropped_overlap"] = dropped_overlap;
  doc["skipped_no_token"] = skipped_no_token;
  doc["repaired_tags"] = repaired_tags;
  doc["warnings"] = warnings;
  return doc.dump(2);
}

TagSequence to_bio(const ArticleDocument& doc, std::span<const GoldAnnotation> annotations,
                   const Tokenization& tok, ConversionReport* report) {
  ConversionReport local;
  local.annotations = annotations.size();

  std::vector<std::size_t> order(annotations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto len_a = annotations[a].end - annotations[a].start;
    const auto len_b = annotations[b].end - annotations[b].start;
    if (len_a != len_b) return len_a > len_b;
    return annotations[a].start < annotations[b].start;
  });

  std::vector<std::size_t> accepted;
  for (std::size_t idx : order) {
    const auto& ann = annotations[idx];
    const bool overlaps = std::any_of(accepted.begin(), accepted.end(), [&](std::size_t other) {
      return annotations[other].start < ann.end && ann.start < annotations[other].end;
    });
    if (overlaps) {
      ++local.dropped_overlap;
      local.warnings.push_back(doc.id + ": dropped overlapping span " +
                               std::to_string(ann.start) + "-" + std::to_string(ann.end));
    } else {
      accepted.push_back(idx);
    }
  }
  std::sort(accepted.begin(), accepted.end(), [&](std::size_t a, std::size_t b) {
    return annotations[a].start < annotations[b].start;
  });

  TagSequence tags(tok.size(), Tag::O);
  for (std::size_t idx : accepted) {
    const auto& ann = annotations[idx];
    bool first = true;
    for (std::size_t t = 0; t < tok.size(); ++t) {
      if (tok[t].start >= ann.end) break;
      if (tok[t].end <= ann.start || tags[t] != Tag::O) continue;
      tags[t] = first ? begin_tag(ann.main_role) : inside_tag(ann.main_role);
      first = false;
    }
    if (first) {
      ++local.skipped_no_token;
      local.warnings.push_back(doc.id + ": span " + std::to_string(ann.start) + "-" +
                               std::to_string(ann.end) + " covers no token");
    } else {
      ++local.converted;
    }
  }
  local.repaired_tags = repair_bio(tags);
  if (report != nullptr) *report += local;
  return tags;
}

std::vector<LabeledSpan> spans_from_bio(std::span<const Tag> tags, const Tokenization& tok,
                                        std::u32string_view text,
                                        std::span<const double> token_confidence) {
  if (tags.size() != tok.size()) throw std::invalid_argument("tag/token length mismatch");
  std::vector<LabeledSpan> spans;
  std::size_t open = 0;
  bool is_open = false;
  MainRole role = MainRole::Protagonist;

  auto close = [&](std::size_t last) {
    if (!is_open) return;
    LabeledSpan span;
    span.start = tok[open].start;
    span.end = tok[last].end;
    span.text = std::u32string(text.substr(span.start, span.end - span.start));
    span.main_role = role;
    if (!token_confidence.empty()) {
      double sum = 0.0;
      for (std::size_t t = open; t <= last; ++t) sum += token_confidence[t];
      span.confidence = std::clamp(sum / static_cast<double>(last - open + 1), 0.0, 1.0);
    }
    spans.push_back(std::move(span));
    is_open = false;
  };

  for (std::size_t t = 0; t < tags.size(); ++t) {
    const Tag tag = tags[t];
    if (tag == Tag::O) {
      if (t > 0) close(t - 1);
      continue;
    }
    const MainRole tag_main = tag_role(tag);
    if (is_inside(tag) && is_open && tag_main == role) continue;
    if (t > 0) close(t - 1);
    open = t;
    role = tag_main;
    is_open = true;
  }
  if (!tags.empty()) close(tags.size() - 1);
  return spans;
}

DatasetError::DatasetError(const std::string& article_id, std::size_t row, const std::string& what)
    : ValidationError(article_id + " (row " + std::to_string(row) + "): " + what),
      article_id_(article_id),
      row_(row) {}

void validate_annotation(const ArticleDocument& doc, const GoldAnnotation& annotation) {
  if (annotation.end <= annotation.start || annotation.end > doc.text.size()) {
    throw ValidationError("invalid span " + std::to_string(annotation.start) + "-" +
                          std::to_string(annotation.end));
  }
  const auto slice =
      std::u32string_view(doc.text).substr(annotation.start, annotation.end - annotation.start);
  if (slice != annotation.mention) {
    throw ValidationError("mention/offset mismatch: expected '" + u32_to_utf8(annotation.mention) +
                          "', text has '" + u32_to_utf8(slice) + "'");
  }
  if (annotation.main_role == MainRole::Unknown) {
    if (!annotation.fine_roles.empty()) {
      throw ValidationError("Unknown spans carry no fine roles");
    }
    return;
  }
  validate_assignment(annotation.main_role, annotation.fine_roles);
}

std::string language_from_id(std::string_view article_id) {
  const std::string_view prefix = article_id.substr(0, article_id.find('_'));
  std::string code;
  for (char c : prefix) code.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (std::string_view known : {"bg", "en", "hi", "pt", "ru"}) {
    if (code == known) return code;
  }
  return "other";
}

std::string domain_from_id(std::string_view article_id) {
  const std::size_t first = article_id.find('_');
  if (first == std::string_view::npos) return {};
  const std::size_t second = article_id.find('_', first + 1);
  const std::string_view segment = article_id.substr(first + 1, second - first - 1);
  if (segment == "UA") return "UA-war";
  if (segment == "CC") return "climate";
  return {};
}

ArticleDocument make_document(std::string id, std::u32string text) {
  ArticleDocument doc;
  doc.language = language_from_id(id);
  doc.domain_tag = domain_from_id(id);
  doc.id = std::move(id);
  doc.text = std::move(text);
  return doc;
}

std::vector<AnnotationRow> read_annotation_rows(const std::filesystem::path& tsv) {
  std::ifstream in(tsv, std::ios::binary);
  if (!in) throw ValidationError("cannot open annotation file " + tsv.string());
  std::vector<AnnotationRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_ascii(line).empty()) continue;
    const auto fields = split_tabs(line);
    const std::string article_id(trim_ascii(fields[0]));
    if (line_no == 1 && article_id == "article_id") continue;
    if (fields.size() < 5) throw DatasetError(article_id, line_no, "expected at least 5 columns");

    AnnotationRow row;
    row.line = line_no;
    auto& ann = row.annotation;
    ann.article_id = article_id;
    ann.mention = utf8_to_u32(fields[1]);
    ann.start = parse_offset(fields[2], article_id, line_no);
    ann.end = parse_offset(fields[3], article_id, line_no);
    try {
      ann.main_role = parse_main_role(fields[4]);
      if (fields.size() > 5) ann.fine_roles = parse_fine_role_list(fields[5]);
    } catch (const ValidationError& e) {
      throw DatasetError(article_id, line_no, e.what());
    }
    if (fields.size() > 6 && !trim_ascii(fields[6]).empty()) {
      try {
        row.confidence = std::stod(std::string(trim_ascii(fields[6])));
      } catch (const std::exception&) {
        throw DatasetError(article_id, line_no, "invalid confidence");
      }
    }
    if (ann.end <= ann.start) throw DatasetError(article_id, line_no, "invalid span");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_annotations_tsv(const std::filesystem::path& tsv,
                           std::span<const GoldAnnotation> annotations,
                           std::span<const double> confidences) {
  std::ofstream out(tsv, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + tsv.string());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& ann = annotations[i];
    out << ann.article_id << '\t' << u32_to_utf8(ann.mention) << '\t' << ann.start << '\t'
        << ann.end << '\t' << main_role_name(ann.main_role) << '\t'
        << format_fine_role_list(ann.fine_roles);
    if (!confidences.empty()) out << '\t' << confidences[i];
    out << '\n';
  }
}

std::u32string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string bytes = buffer.str();
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.erase(0, 3);
  return utf8_to_u32(bytes);
}

void write_text_file(const std::filesystem::path& path, std::string_view utf8) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(utf8.data(), static_cast<std::streamsize>(utf8.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& articles_dir,
                     const std::filesystem::path& annotations_file) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(articles_dir)) {
    throw ValidationError("not a directory: " + articles_dir.string());
  }
  std::map<std::string, DatasetEntry> entries;
  for (const auto& file : fs::directory_iterator(articles_dir)) {
    if (!file.is_regular_file() || file.path().extension() != ".txt") continue;
    const std::string id = file.path().filename().string();
    entries.emplace(id, DatasetEntry{make_document(id, read_text_file(file.path())), {}});
  }

  for (auto& row : read_annotation_rows(annotations_file)) {
    const auto& id = row.annotation.article_id;
    auto it = entries.find(id);
    if (it == entries.end()) it = entries.find(id + ".txt");
    if (it == entries.end()) throw DatasetError(id, row.line, "unknown article");
    row.annotation.article_id = it->first;
    try {
      validate_annotation(it->second.document, row.annotation);
    } catch (const ValidationError& e) {
      throw DatasetError(id, row.line, e.what());
    }
    it->second.annotations.push_back(std::move(row.annotation));
  }

  Dataset dataset;
  dataset.reserve(entries.size());
  for (auto& [id, entry] : entries) {
    if (entry.document.text.empty()) continue;
    std::stable_sort(entry.annotations.begin(), entry.annotations.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    dataset.push_back(std::move(entry));
  }
  return dataset;
}

}  // namespace framing
