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

// Analysis service: article ingestion, per-session storage and the read-side
// views served to the browser client. HTTP routing lives in http_server.hpp;
// everything here is transport-agnostic and throws ServiceError with an
// HTTP-style status.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "framing/corpus.hpp"
#include "framing/role_classifier.hpp"
#include "framing/sequence_labeler.hpp"

namespace framing {

class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct SentenceBounds {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const SentenceBounds&) const = default;
};

// Boundaries fall after '.', '!', '?' or U+0964 when followed by whitespace
// or the end of the text. The trailing whitespace belongs to the previous
// sentence, so the bounds tile [0, text.size()) exactly.
std::vector<SentenceBounds> split_sentences(std::u32string_view text);

// Index of the sentence containing `offset`; the last sentence when past the end.
std::size_t sentence_of(std::span<const SentenceBounds> sentences, std::size_t offset);

// Headline and paragraph text of an HTML page, paragraphs separated by blank
// lines. Falls back to all visible text when the page has no <p> or <h1>.
std::string html_to_text(std::string_view html);

struct AnnotatedEntity {
  LabeledSpan span;
  FineRolePrediction fine;
  std::size_t sentence = 0;
  bool is_repeat = false;

  nlohmann::json to_json() const;
  static AnnotatedEntity from_json(const nlohmann::json& j);
};

// Sorts by start, assigns sentence ordinals and repeat flags. A mention is a
// repeat when an earlier one has the same normalized surface and fine-role set.
void finalize_entities(std::vector<AnnotatedEntity>& entities,
                       std::span<const SentenceBounds> sentences);

struct StoredArticle {
  std::string session_id;
  std::string filename;
  std::string created_at;  // ISO-8601 UTC
  std::string source_url;  // empty for pasted text
  ArticleDocument document;
  std::vector<AnnotatedEntity> entities;
  std::vector<SentenceBounds> sentences;

  nlohmann::json analysis_json() const;
  nlohmann::json meta_json() const;
};

// Produces the detected and classified entities of one document.
class AnalysisPipeline {
 public:
  virtual ~AnalysisPipeline() = default;
  virtual std::vector<AnnotatedEntity> analyze(const ArticleDocument& doc) const = 0;
};

// Stage 1 followed by stage 2 on every detected span.
class ModelPipeline : public AnalysisPipeline {
 public:
  ModelPipeline(SequenceLabeler labeler, RoleClassifier classifier);
  static std::shared_ptr<ModelPipeline> load(const std::filesystem::path& labeler_dir,
                                             const std::filesystem::path& classifier_dir);
  std::vector<AnnotatedEntity> analyze(const ArticleDocument& doc) const override;

 private:
  SequenceLabeler labeler_;
  RoleClassifier classifier_;
};

// Returns the response body of a GET; throws ServiceError(502) on failure.
using Fetcher = std::function<std::string(const std::string& url)>;
Fetcher http_fetcher(std::chrono::seconds timeout);

// One directory per session under the root; one directory per article
// holding text.txt, analysis.json and meta.json. Articles are written to a
// hidden staging directory and renamed into place, so readers never observe
// a partial article.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::string create_session();
  bool has_session(const std::string& id) const;
  // Throws ServiceError(404) for an unknown session.
  std::filesystem::path session_dir(const std::string& id) const;

  // Picks `<name>_<UTC timestamp>`, bumping the timestamp on collision,
  // and persists atomically. Fills article.filename and created_at.
  void save(StoredArticle& article);

  std::vector<std::string> list(const std::string& session_id) const;
  StoredArticle load(const std::string& session_id, const std::string& filename) const;

  // Test hook: runs between writing the staging directory and the rename.
  std::function<void(const std::filesystem::path& staging)> before_commit;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

struct IngestRequest {
  std::string text;
  std::string url;
  std::string filename;
  std::string language;  // inferred from the filename when empty
};

struct AnnotationQuery {
  double min_confidence = 0.0;
  bool hide_repeats = false;
};

struct ServiceConfig {
  std::filesystem::path labeler_dir;
  std::filesystem::path classifier_dir;
  std::filesystem::path storage_root = "sessions";
  std::filesystem::path static_dir;
  std::chrono::seconds fetch_timeout{10};
  std::string host = "127.0.0.1";
  int port = 8080;

  // FRAMING_SEQ_MODEL, FRAMING_CLS_MODEL, FRAMING_STORAGE_ROOT,
  // FRAMING_STATIC_DIR, FRAMING_FETCH_TIMEOUT (seconds), FRAMING_HOST,
  // FRAMING_PORT. Unset variables keep the defaults.
  static ServiceConfig from_env();
};

class AnalysisService {
 public:
  AnalysisService(std::shared_ptr<const AnalysisPipeline> pipeline, SessionStore& store,
                  Fetcher fetcher = {});

  SessionStore& store() { return store_; }

  std::string create_session() { return store_.create_session(); }
  StoredArticle ingest(const std::string& session_id, const IngestRequest& request);
  nlohmann::json list_articles(const std::string& session_id) const;

  // Text plus entities whose top fine-role probability is >= min_confidence.
  nlohmann::json get_annotations(const std::string& session_id, const std::string& filename,
                                 const AnnotationQuery& query = {}) const;

  // `label` names a main role or a fine role. An empty file list means every
  // article in the session.
  nlohmann::json sentences_for_label(const std::string& session_id,
                                     const std::vector<std::string>& filenames,
                                     const std::string& label) const;

  // Case-insensitive, left to right, resuming after each match.
  nlohmann::json search(const std::string& session_id, const std::vector<std::string>& filenames,
                        const std::string& query) const;

  nlohmann::json aggregate_graph(const std::string& session_id,
                                 const std::vector<std::string>& filenames) const;

  nlohmann::json timeline(const std::string& session_id, const std::string& filename,
                          const std::string& entity) const;

  // 1 to 4 articles.
  nlohmann::json compare(const std::string& session_id,
                         const std::vector<std::string>& filenames) const;

 private:
  std::vector<StoredArticle> load_many(const std::string& session_id,
                                       const std::vector<std::string>& filenames) const;

  std::shared_ptr<const AnalysisPipeline> pipeline_;
  SessionStore& store_;
  Fetcher fetcher_;
};

// Counts of main roles and fine roles over a set of entities.
nlohmann::json role_distribution(std::span<const AnnotatedEntity> entities);

}  // namespace framing
