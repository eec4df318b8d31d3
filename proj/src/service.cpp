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

#include "framing/service.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "framing/augmentation.hpp"
#include "framing/text.hpp"

namespace framing {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_sentence_end(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'।'; }

// Session ids and article filenames become path components.
bool is_safe_component(std::string_view s) {
  if (s.empty() || s.size() > 200 || s.front() == '.') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string sanitize_name(std::string_view name) {
  std::string out;
  for (char c : trim_ascii(name)) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    out.push_back(ok ? c : '_');
  }
  while (!out.empty() && out.front() == '.') out.erase(out.begin());
  if (out.size() > 120) out.resize(120);
  return out;
}

std::string utc_stamp(std::chrono::system_clock::time_point tp, bool compact) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, compact ? "%Y%m%dT%H%M%S" : "%Y-%m-%dT%H:%M:%S");
  os << (compact ? "" : ".") << std::setw(3) << std::setfill('0') << ms % 1000 << 'Z';
  return os.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ServiceError(500, "cannot read " + path.filename().string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) throw ServiceError(500, "cannot write " + path.filename().string());
}

std::string role_set_key(const FineRoleSet& roles) { return format_fine_role_list(roles); }

// ---------------------------------------------------------------------------
// HTML extraction.

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void append_entity(std::string& out, std::string_view entity) {
  static const std::map<std::string, char32_t> named = {
      {"amp", U'&'},          {"lt", U'<'},           {"gt", U'>'},
      {"quot", U'"'},         {"apos", U'\''},        {"nbsp", U' '},
      {"mdash", U'\u2014'},   {"ndash", U'\u2013'},   {"hellip", U'\u2026'},
      {"rsquo", U'\u2019'},   {"lsquo", U'\u2018'},   {"rdquo", U'\u201D'},
      {"ldquo", U'\u201C'}};
  char32_t cp = 0;
  if (!entity.empty() && entity[0] == '#') {
    const bool hex = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X');
    const std::string digits(entity.substr(hex ? 2 : 1));
    char* end = nullptr;
    const unsigned long v = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
    if (digits.empty() || *end != '\0' || v == 0 || v > 0x10FFFF) {
      out += "&" + std::string(entity) + ";";
      return;
    }
    cp = static_cast<char32_t>(v);
  } else {
    auto it = named.find(std::string(entity));
    if (it == named.end()) {
      out += "&" + std::string(entity) + ";";
      return;
    }
    cp = it->second;
  }
  out += u32_to_utf8(std::u32string(1, cp));
}

// Decodes entities and collapses whitespace runs to one space.
std::string clean_text(std::string_view raw) {
  std::string decoded;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '&') {
      const std::size_t semi = raw.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 10) {
        append_entity(decoded, raw.substr(i + 1, semi - i - 1));
        i = semi;
        continue;
      }
    }
    decoded.push_back(raw[i]);
  }
  const std::u32string wide = utf8_to_u32(decoded);
  std::u32string out;
  bool space = false;
  for (char32_t c : wide) {
    if (is_space(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(U' ');
    space = false;
    out.push_back(c);
  }
  return u32_to_utf8(out);
}

}  // namespace

std::vector<SentenceBounds> split_sentences(std::u32string_view text) {
  std::vector<SentenceBounds> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_sentence_end(text[i])) continue;
    if (i + 1 < text.size() && !is_space(text[i + 1])) continue;
    std::size_t end = i + 1;
    while (end < text.size() && is_space(text[end])) ++end;
    out.push_back({start, end});
    start = end;
    i = end - 1;
  }
  if (start < text.size()) out.push_back({start, text.size()});
  return out;
}

std::size_t sentence_of(std::span<const SentenceBounds> sentences, std::size_t offset) {
  auto it = std::upper_bound(sentences.begin(), sentences.end(), offset,
                             [](std::size_t o, const SentenceBounds& s) { return o < s.start; });
  return it == sentences.begin() ? 0 : static_cast<std::size_t>(it - sentences.begin() - 1);
}

std::string html_to_text(std::string_view html) {
  enum class Block { None, Headline, Paragraph };
  std::string title, headline, all_text, current;
  std::vector<std::string> paragraphs;
  Block block = Block::None;
  bool in_title = false;
  std::string skip_until;  // closing tag of a script-like element

  auto flush = [&] {
    std::string cleaned = clean_text(current);
    if (block == Block::Headline && headline.empty()) headline = cleaned;
    if (block == Block::Paragraph && !cleaned.empty()) paragraphs.push_back(cleaned);
    current.clear();
    block = Block::None;
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      const std::size_t next = std::min(html.find('<', i), html.size());
      const std::string_view chunk = html.substr(i, next - i);
      if (skip_until.empty()) {
        if (in_title) title += chunk;
        if (block != Block::None) current += chunk;
        all_text += chunk;
        all_text += ' ';
      }
      i = next;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      const std::size_t end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    const std::size_t close = html.find('>', i);
    if (close == std::string_view::npos) break;
    std::string_view tag = html.substr(i + 1, close - i - 1);
    i = close + 1;
    const bool closing = !tag.empty() && tag.front() == '/';
    if (closing) tag.remove_prefix(1);
    std::size_t name_end = 0;
    while (name_end < tag.size() && std::isalnum(static_cast<unsigned char>(tag[name_end]))) ++name_end;
    const std::string name = lower_ascii(tag.substr(0, name_end));

    if (!skip_until.empty()) {
      if (closing && name == skip_until) skip_until.clear();
      continue;
    }
    if (!closing && (name == "script" || name == "style" || name == "noscript" ||
                     name == "template" || name == "svg")) {
      if (tag.empty() || tag.back() != '/') skip_until = name;
      continue;
    }
    if (name == "title") {
      in_title = !closing;
      continue;
    }
    const bool is_headline = name == "h1";
    const bool is_paragraph = name == "p";
    if (is_headline || is_paragraph) {
      if (block != Block::None) flush();
      if (!closing) block = is_headline ? Block::Headline : Block::Paragraph;
      continue;
    }
    if (name == "br") {
      if (block != Block::None) current += ' ';
      all_text += ' ';
      continue;
    }
    // Block-level elements end an unclosed paragraph.
    static const std::set<std::string> breakers = {"div", "section", "article", "li", "ul", "ol",
                                                   "table", "tr", "h2", "h3", "h4", "h5", "h6",
                                                   "header", "footer", "nav", "body", "blockquote"};
    if (breakers.count(name)) {
      if (block != Block::None) flush();
      all_text += "\n\n";
    }
  }
  if (block != Block::None) flush();

  if (headline.empty()) headline = clean_text(title);
  if (paragraphs.empty() && headline.empty()) return clean_text(all_text);
  std::string out = headline;
  for (const auto& p : paragraphs) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

// ---------------------------------------------------------------------------

json AnnotatedEntity::to_json() const {
  return {{"start", span.start},
          {"end", span.end},
          {"text", u32_to_utf8(span.text)},
          {"main_role", main_role_name(span.main_role)},
          {"confidence", span.confidence},
          {"fine_roles", fine.to_json()},
          {"top_probability", fine.top_probability()},
          {"sentence", sentence},
          {"is_repeat", is_repeat}};
}

AnnotatedEntity AnnotatedEntity::from_json(const json& j) {
  AnnotatedEntity e;
  e.span.start = j.at("start").get<std::size_t>();
  e.span.end = j.at("end").get<std::size_t>();
  e.span.text = utf8_to_u32(j.at("text").get<std::string>());
  e.span.main_role = parse_main_role(j.at("main_role").get<std::string>());
  e.span.confidence = j.at("confidence").get<double>();
  for (const auto& r : j.at("fine_roles")) {
    e.fine.roles.emplace_back(parse_fine_role(r.at("role").get<std::string>()), r.at("p").get<double>());
  }
  e.sentence = j.at("sentence").get<std::size_t>();
  e.is_repeat = j.at("is_repeat").get<bool>();
  return e;
}

void finalize_entities(std::vector<AnnotatedEntity>& entities,
                       std::span<const SentenceBounds> sentences) {
  std::stable_sort(entities.begin(), entities.end(), [](const auto& a, const auto& b) {
    return std::tie(a.span.start, a.span.end) < std::tie(b.span.start, b.span.end);
  });
  std::set<std::pair<std::u32string, std::string>> seen;
  for (auto& e : entities) {
    e.sentence = sentence_of(sentences, e.span.start);
    e.is_repeat = !seen.emplace(normalize_text(e.span.text), role_set_key(e.fine.role_set())).second;
  }
}

json StoredArticle::analysis_json() const {
  json ents = json::array();
  for (const auto& e : entities) ents.push_back(e.to_json());
  json sents = json::array();
  for (const auto& s : sentences) sents.push_back({s.start, s.end});
  return {{"filename", filename}, {"entities", ents}, {"sentences", sents}};
}

json StoredArticle::meta_json() const {
  return {{"session_id", session_id},
          {"filename", filename},
          {"created_at", created_at},
          {"source_url", source_url},
          {"language", document.language},
          {"domain", document.domain_tag},
          {"characters", document.text.size()},
          {"entity_count", entities.size()}};
}

// ---------------------------------------------------------------------------

ModelPipeline::ModelPipeline(SequenceLabeler labeler, RoleClassifier classifier)
    : labeler_(std::move(labeler)), classifier_(std::move(classifier)) {}

std::shared_ptr<ModelPipeline> ModelPipeline::load(const fs::path& labeler_dir,
                                                   const fs::path& classifier_dir) {
  return std::make_shared<ModelPipeline>(SequenceLabeler::load(labeler_dir),
                                         RoleClassifier::load(classifier_dir));
}

std::vector<AnnotatedEntity> ModelPipeline::analyze(const ArticleDocument& doc) const {
  std::vector<AnnotatedEntity> out;
  for (auto& span : label_article(doc, labeler_)) {
    AnnotatedEntity e;
    e.fine = classify_span(doc, span, classifier_);
    e.span = std::move(span);
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::string SessionStore::create_session() {
  std::lock_guard lock(mutex_);
  std::random_device device;
  std::mt19937_64 rng((static_cast<std::uint64_t>(device()) << 32) ^ device());
  while (true) {
    std::ostringstream id;
    id << "session_" << std::hex << std::setw(12) << std::setfill('0') << (rng() & 0xFFFFFFFFFFFFull);
    const fs::path dir = root_ / id.str();
    if (fs::create_directory(dir)) return id.str();
  }
}

bool SessionStore::has_session(const std::string& id) const {
  return is_safe_component(id) && fs::is_directory(root_ / id);
}

fs::path SessionStore::session_dir(const std::string& id) const {
  if (!has_session(id)) throw ServiceError(404, "unknown session: " + id);
  return root_ / id;
}

void SessionStore::save(StoredArticle& article) {
  const fs::path dir = session_dir(article.session_id);
  const std::string base = sanitize_name(article.filename);
  if (std::none_of(base.begin(), base.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); })) {
    throw ServiceError(400, "filename must contain a letter or digit");
  }

  std::lock_guard lock(mutex_);
  auto tp = std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
  std::string name = base + "_" + utc_stamp(tp, true);
  while (fs::exists(dir / name)) {
    tp += std::chrono::milliseconds(1);
    name = base + "_" + utc_stamp(tp, true);
  }
  article.filename = name;
  article.created_at = utc_stamp(tp, false);
  article.document.id = name;

  const fs::path staging = dir / (".staging-" + name);
  try {
    fs::remove_all(staging);
    fs::create_directory(staging);
    write_file(staging / "text.txt", u32_to_utf8(article.document.text));
    write_file(staging / "analysis.json", article.analysis_json().dump(2));
    write_file(staging / "meta.json", article.meta_json().dump(2));
    if (before_commit) before_commit(staging);
    fs::rename(staging, dir / name);
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
}

std::vector<std::string> SessionStore::list(const std::string& session_id) const {
  const fs::path dir = session_dir(session_id);
  std::vector<std::pair<std::string, std::string>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || !is_safe_component(name)) continue;
    if (!fs::exists(entry.path() / "meta.json")) continue;
    const json meta = json::parse(read_file(entry.path() / "meta.json"));
    found.emplace_back(meta.value("created_at", ""), name);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [created, name] : found) out.push_back(std::move(name));
  return out;
}

StoredArticle SessionStore::load(const std::string& session_id, const std::string& filename) const {
  const fs::path dir = session_dir(session_id);
  if (!is_safe_component(filename) || !fs::is_directory(dir / filename)) {
    throw ServiceError(404, "unknown article: " + filename);
  }
  const fs::path art = dir / filename;
  const json meta = json::parse(read_file(art / "meta.json"));
  const json analysis = json::parse(read_file(art / "analysis.json"));

  StoredArticle a;
  a.session_id = session_id;
  a.filename = filename;
  a.created_at = meta.value("created_at", "");
  a.source_url = meta.value("source_url", "");
  a.document.id = filename;
  a.document.language = meta.value("language", "other");
  a.document.domain_tag = meta.value("domain", "");
  a.document.text = utf8_to_u32(read_file(art / "text.txt"));
  for (const auto& e : analysis.at("entities")) a.entities.push_back(AnnotatedEntity::from_json(e));
  for (const auto& s : analysis.at("sentences")) {
    a.sentences.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
  }
  return a;
}

// ---------------------------------------------------------------------------

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  auto get = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = get("FRAMING_SEQ_MODEL")) c.labeler_dir = *v;
  if (auto v = get("FRAMING_CLS_MODEL")) c.classifier_dir = *v;
  if (auto v = get("FRAMING_STORAGE_ROOT")) c.storage_root = *v;
  if (auto v = get("FRAMING_STATIC_DIR")) c.static_dir = *v;
  if (auto v = get("FRAMING_HOST")) c.host = *v;
  try {
    if (auto v = get("FRAMING_FETCH_TIMEOUT")) c.fetch_timeout = std::chrono::seconds(std::stoi(*v));
    if (auto v = get("FRAMING_PORT")) c.port = std::stoi(*v);
  } catch (const std::exception&) {
    throw ValidationError("FRAMING_FETCH_TIMEOUT and FRAMING_PORT must be integers");
  }
  return c;
}

// ---------------------------------------------------------------------------

json role_distribution(std::span<const AnnotatedEntity> entities) {
  json main = json::object(), fine = json::object();
  for (MainRole m : kCanonicalMainRoles) main[std::string(main_role_name(m))] = 0;
  for (FineRole f : all_fine_roles()) fine[std::string(fine_role_name(f))] = 0;
  for (const auto& e : entities) {
    main[std::string(main_role_name(e.span.main_role))] =
        main[std::string(main_role_name(e.span.main_role))].get<int>() + 1;
    for (FineRole f : e.fine.role_set()) {
      const std::string key(fine_role_name(f));
      fine[key] = fine[key].get<int>() + 1;
    }
  }
  return {{"main", main}, {"fine", fine}};
}

AnalysisService::AnalysisService(std::shared_ptr<const AnalysisPipeline> pipeline,
                                 SessionStore& store, Fetcher fetcher)
    : pipeline_(std::move(pipeline)), store_(store), fetcher_(std::move(fetcher)) {
  if (!pipeline_) throw std::invalid_argument("analysis service needs a pipeline");
}

StoredArticle AnalysisService::ingest(const std::string& session_id, const IngestRequest& request) {
  store_.session_dir(session_id);
  if (trim_ascii(request.filename).empty()) throw ServiceError(400, "filename is required");
  const bool has_text = !trim_ascii(request.text).empty();
  const bool has_url = !trim_ascii(request.url).empty();
  if (has_text && has_url) throw ServiceError(400, "provide either text or url, not both");
  if (!has_text && !has_url) throw ServiceError(400, "article text or url is required");

  std::string body = request.text;
  if (has_url) {
    if (!fetcher_) throw ServiceError(502, "URL fetching is not configured");
    body = html_to_text(fetcher_(std::string(trim_ascii(request.url))));
    if (trim_ascii(body).empty()) throw ServiceError(400, "no article text found at " + request.url);
  }

  StoredArticle article;
  article.session_id = session_id;
  article.filename = request.filename;
  article.source_url = has_url ? std::string(trim_ascii(request.url)) : "";
  article.document = make_document(sanitize_name(request.filename), utf8_to_u32(body));
  if (!request.language.empty()) article.document.language = request.language;
  article.sentences = split_sentences(article.document.text);
  article.entities = pipeline_->analyze(article.document);
  for (const auto& e : article.entities) {
    const auto& s = e.span;
    if (s.start >= s.end || s.end > article.document.text.size() ||
        article.document.text.compare(s.start, s.end - s.start, s.text) != 0) {
      throw ServiceError(500, "pipeline produced a span outside the article");
    }
    validate_assignment(s.main_role, e.fine.role_set());
  }
  finalize_entities(article.entities, article.sentences);
  store_.save(article);
  return article;
}

json AnalysisService::list_articles(const std::string& session_id) const {
  json out = json::array();
  for (const auto& name : store_.list(session_id)) {
    out.push_back(json::parse(read_file(store_.session_dir(session_id) / name / "meta.json")));
  }
  return out;
}

std::vector<StoredArticle> AnalysisService::load_many(const std::string& session_id,
                                                      const std::vector<std::string>& filenames) const {
  std::vector<StoredArticle> out;
  for (const auto& f : filenames.empty() ? store_.list(session_id) : filenames) {
    out.push_back(store_.load(session_id, f));
  }
  return out;
}

json AnalysisService::get_annotations(const std::string& session_id, const std::string& filename,
                                      const AnnotationQuery& query) const {
  const StoredArticle a = store_.load(session_id, filename);
  json ents = json::array();
  std::size_t hidden = 0;
  for (const auto& e : a.entities) {
    if (e.fine.top_probability() < query.min_confidence) continue;
    if (query.hide_repeats && e.is_repeat) {
      ++hidden;
      continue;
    }
    ents.push_back(e.to_json());
  }
  json sents = json::array();
  for (const auto& s : a.sentences) sents.push_back({s.start, s.end});
  return {{"filename", a.filename},
          {"created_at", a.created_at},
          {"language", a.document.language},
          {"text", u32_to_utf8(a.document.text)},
          {"sentences", sents},
          {"min_confidence", query.min_confidence},
          {"hide_repeats", query.hide_repeats},
          {"total_entities", a.entities.size()},
          {"hidden_repeats", hidden},
          {"entities", ents}};
}

json AnalysisService::sentences_for_label(const std::string& session_id,
                                          const std::vector<std::string>& filenames,
                                          const std::string& label) const {
  const auto main = try_parse_main_role(label);
  const auto fine = try_parse_fine_role(label);
  if (!main && !fine) throw ServiceError(400, "unknown label: " + label);
  auto carries = [&](const AnnotatedEntity& e) {
    if (main) return e.span.main_role == *main;
    return e.fine.role_set().count(*fine) > 0;
  };

  json out = json::array();
  for (const auto& a : load_many(session_id, filenames)) {
    std::map<std::size_t, json> by_sentence;
    for (const auto& e : a.entities) {
      if (!carries(e)) continue;
      auto [it, fresh] = by_sentence.try_emplace(e.sentence);
      if (fresh) {
        const auto& s = a.sentences.at(e.sentence);
        it->second = {{"filename", a.filename},
                      {"sentence_index", e.sentence},
                      {"start", s.start},
                      {"end", s.end},
                      {"sentence", u32_to_utf8(std::u32string_view(a.document.text).substr(s.start, s.end - s.start))},
                      {"entities", json::array()}};
      }
      it->second["entities"].push_back(e.to_json());
    }
    for (auto& [idx, item] : by_sentence) out.push_back(std::move(item));
  }
  return out;
}

json AnalysisService::search(const std::string& session_id, const std::vector<std::string>& filenames,
                             const std::string& query) const {
  if (filenames.empty()) throw ServiceError(400, "select at least one article");
  const std::u32string needle = to_lower(utf8_to_u32(query));
  if (trim(needle).empty()) throw ServiceError(400, "search query is empty");

  json out = json::array();
  for (const auto& a : load_many(session_id, filenames)) {
    const std::u32string hay = to_lower(a.document.text);
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::u32string::npos) {
      const std::size_t end = pos + needle.size();
      const auto& s = a.sentences.at(sentence_of(a.sentences, pos));
      const std::u32string_view text(a.document.text);
      out.push_back({{"filename", a.filename},
                     {"start", pos},
                     {"end", end},
                     {"match", u32_to_utf8(text.substr(pos, needle.size()))},
                     {"sentence_index", sentence_of(a.sentences, pos)},
                     {"sentence_start", s.start},
                     {"sentence", u32_to_utf8(text.substr(s.start, s.end - s.start))}});
      pos = end;
    }
  }
  return out;
}

namespace {

// Groups surfaces whose normalized forms are equal or alias-related.
class EntityIdentity {
 public:
  explicit EntityIdentity(const std::vector<StoredArticle>& articles) {
    for (const auto& a : articles) {
      for (const auto& e : a.entities) {
        const std::u32string key = normalize_text(e.span.text);
        if (index_.emplace(key, keys_.size()).second) {
          keys_.push_back(key);
          display_.push_back(e.span.text);
        }
      }
    }
    parent_.resize(keys_.size());
    std::iota(parent_.begin(), parent_.end(), 0);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      for (std::size_t j = i + 1; j < keys_.size(); ++j) {
        if (alias_related(keys_[i], keys_[j])) parent_[find(j)] = find(i);
      }
    }
  }

  // Node id of the cluster: the longest (then smallest) normalized member.
  std::string node_of(std::u32string_view surface) {
    const std::size_t root = find(index_.at(normalize_text(surface)));
    auto it = canonical_.find(root);
    if (it != canonical_.end()) return it->second;
    std::size_t best = root;
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (find(i) != root) continue;
      if (keys_[i].size() > keys_[best].size() ||
          (keys_[i].size() == keys_[best].size() && keys_[i] < keys_[best])) {
        best = i;
      }
    }
    std::string id = "entity:" + u32_to_utf8(keys_[best]);
    labels_[id] = u32_to_utf8(display_[best]);
    return canonical_[root] = id;
  }

  const std::string& label(const std::string& id) const { return labels_.at(id); }

 private:
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }

  std::map<std::u32string, std::size_t> index_;
  std::vector<std::u32string> keys_;
  std::vector<std::u32string> display_;
  std::vector<std::size_t> parent_;
  std::map<std::size_t, std::string> canonical_;
  std::map<std::string, std::string> labels_;
};

}  // namespace

json AnalysisService::aggregate_graph(const std::string& session_id,
                                      const std::vector<std::string>& filenames) const {
  json graph = {{"nodes", json::array()}, {"edges", json::array()}};
  if (filenames.empty()) return graph;
  const auto articles = load_many(session_id, filenames);
  EntityIdentity identity(articles);

  struct NodeInfo {
    std::string type, label, main_role;
    std::set<std::string> articles, surfaces;
    std::size_t mentions = 0;
  };
  std::map<std::string, NodeInfo> nodes;
  std::map<std::tuple<std::string, std::string, std::string>, std::set<std::string>> edges;
  auto link = [&](std::string a, std::string b, const std::string& type, const std::string& art) {
    if (b < a) std::swap(a, b);
    edges[{type, a, b}].insert(art);
  };

  for (const auto& a : articles) {
    std::set<std::string> entity_nodes, role_nodes;
    for (const auto& e : a.entities) {
      const std::string eid = identity.node_of(e.span.text);
      auto& en = nodes[eid];
      en.type = "entity";
      en.label = identity.label(eid);
      en.articles.insert(a.filename);
      en.surfaces.insert(u32_to_utf8(e.span.text));
      ++en.mentions;
      entity_nodes.insert(eid);
      for (FineRole f : e.fine.role_set()) {
        const std::string rid = "role:" + std::string(fine_role_name(f));
        auto& rn = nodes[rid];
        rn.type = "role";
        rn.label = fine_role_name(f);
        rn.main_role = main_role_name(main_of(f));
        rn.articles.insert(a.filename);
        ++rn.mentions;
        role_nodes.insert(rid);
        link(eid, rid, "assigned", a.filename);
      }
    }
    for (auto i = entity_nodes.begin(); i != entity_nodes.end(); ++i) {
      for (auto j = std::next(i); j != entity_nodes.end(); ++j) link(*i, *j, "entity-cooccurrence", a.filename);
    }
    for (auto i = role_nodes.begin(); i != role_nodes.end(); ++i) {
      for (auto j = std::next(i); j != role_nodes.end(); ++j) link(*i, *j, "role-cooccurrence", a.filename);
    }
  }

  for (const auto& [id, n] : nodes) {
    json node = {{"id", id},
                 {"type", n.type},
                 {"label", n.label},
                 {"mentions", n.mentions},
                 {"articles", n.articles}};
    if (n.type == "entity") node["surfaces"] = n.surfaces;
    else node["main_role"] = n.main_role;
    graph["nodes"].push_back(std::move(node));
  }
  for (const auto& [key, arts] : edges) {
    const auto& [type, source, target] = key;
    graph["edges"].push_back({{"source", source},
                              {"target", target},
                              {"type", type},
                              {"weight", arts.size()},
                              {"articles", arts}});
  }
  return graph;
}

json AnalysisService::timeline(const std::string& session_id, const std::string& filename,
                               const std::string& entity) const {
  const std::u32string target = normalize_text(utf8_to_u32(entity));
  if (target.empty()) throw ServiceError(400, "entity is required");
  const StoredArticle a = store_.load(session_id, filename);
  const std::u32string_view text(a.document.text);

  json out = json::array();
  std::optional<FineRoleSet> previous;
  for (const auto& e : a.entities) {
    const std::u32string surface = normalize_text(e.span.text);
    if (surface != target && !alias_related(surface, target)) continue;
    const FineRoleSet roles = e.fine.role_set();
    const auto& s = a.sentences.at(e.sentence);
    out.push_back({{"sentence_index", e.sentence},
                   {"start", e.span.start},
                   {"end", e.span.end},
                   {"text", u32_to_utf8(e.span.text)},
                   {"main_role", main_role_name(e.span.main_role)},
                   {"fine_roles", e.fine.to_json()},
                   {"sentence", u32_to_utf8(text.substr(s.start, s.end - s.start))},
                   {"transition", previous.has_value() && *previous != roles}});
    previous = roles;
  }
  return out;
}

json AnalysisService::compare(const std::string& session_id,
                              const std::vector<std::string>& filenames) const {
  if (filenames.empty() || filenames.size() > 4) {
    throw ServiceError(400, "compare takes 1 to 4 articles, got " + std::to_string(filenames.size()));
  }
  json articles = json::array();
  std::vector<AnnotatedEntity> pooled;
  for (const auto& f : filenames) {
    const StoredArticle a = store_.load(session_id, f);
    json view = get_annotations(session_id, f);
    view["distribution"] = role_distribution(a.entities);
    articles.push_back(std::move(view));
    pooled.insert(pooled.end(), a.entities.begin(), a.entities.end());
  }
  return {{"articles", articles}, {"cumulative", role_distribution(pooled)}};
}

}  // namespace framing
