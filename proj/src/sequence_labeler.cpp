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

#include "framing/sequence_labeler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "framing/evaluation.hpp"
#include "framing/random.hpp"
#include "framing/stopwords.hpp"
#include "framing/text.hpp"

namespace framing {

std::vector<TokenWindow> split_windows(std::size_t num_tokens, std::size_t max_len,
                                       std::size_t overlap) {
  if (max_len == 0 || overlap >= max_len) {
    throw std::invalid_argument("window length must exceed the overlap");
  }
  std::vector<TokenWindow> windows;
  const std::size_t step = max_len - overlap;
  for (std::size_t start = 0; start < num_tokens; start += step) {
    windows.push_back({start, std::min(start + max_len, num_tokens)});
    if (windows.back().end == num_tokens) break;
  }
  return windows;
}

std::vector<std::size_t> window_owners(std::span<const TokenWindow> windows, std::size_t num_tokens) {
  std::vector<std::size_t> owner(num_tokens, 0);
  std::vector<std::size_t> best(num_tokens, 0);
  std::vector<bool> seen(num_tokens, false);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    for (std::size_t pos = windows[w].start; pos < windows[w].end && pos < num_tokens; ++pos) {
      const std::size_t distance = std::min(pos - windows[w].start, windows[w].end - pos);
      if (!seen[pos] || distance > best[pos]) {
        seen[pos] = true;
        best[pos] = distance;
        owner[pos] = w;
      }
    }
  }
  for (std::size_t pos = 0; pos < num_tokens; ++pos) {
    if (!seen[pos]) throw std::invalid_argument("windows do not cover every token");
  }
  return owner;
}

TagSequence merge_window_predictions(std::span<const TokenWindow> windows,
                                     std::span<const TagSequence> window_tags,
                                     std::size_t num_tokens) {
  if (windows.size() != window_tags.size()) throw std::invalid_argument("one tag sequence per window");
  const auto owner = window_owners(windows, num_tokens);
  TagSequence tags(num_tokens, Tag::O);
  for (std::size_t pos = 0; pos < num_tokens; ++pos) {
    const auto& w = windows[owner[pos]];
    tags[pos] = window_tags[owner[pos]].at(pos - w.start);
  }
  repair_bio(tags);
  return tags;
}

namespace {

// Number of whitespace-separated pieces in `gap`.
std::size_t count_tokens(std::u32string_view gap) {
  std::size_t count = 0;
  bool in_token = false;
  for (char32_t c : gap) {
    const bool space = is_space(c);
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

bool should_merge(const LabeledSpan& a, const LabeledSpan& b, std::u32string_view text,
                  double threshold) {
  if (a.main_role != b.main_role || b.start < a.end) return false;
  const std::size_t gap = b.start - a.end;
  if (gap > kMaxMergeGap) return false;
  if (gap > 0 && count_tokens(text.substr(a.end, gap)) > 1) return false;
  const double factor = gap == 0 ? 1.0 : kGapPenalty;
  return std::min(a.confidence, b.confidence) * factor >= threshold;
}

LabeledSpan join(const LabeledSpan& a, const LabeledSpan& b, std::u32string_view text) {
  LabeledSpan out;
  out.start = a.start;
  out.end = b.end;
  out.text = std::u32string(text.substr(out.start, out.end - out.start));
  out.main_role = a.main_role;
  const auto la = static_cast<double>(a.end - a.start);
  const auto lb = static_cast<double>(b.end - b.start);
  out.confidence = la + lb > 0 ? (a.confidence * la + b.confidence * lb) / (la + lb) : a.confidence;
  return out;
}

}  // namespace

std::vector<LabeledSpan> merge_spans(std::span<const LabeledSpan> spans, std::u32string_view text,
                                     double threshold) {
  std::vector<LabeledSpan> current(spans.begin(), spans.end());
  bool changed = true;
  while (changed && !current.empty()) {
    changed = false;
    std::vector<LabeledSpan> next;
    next.push_back(current.front());
    for (std::size_t i = 1; i < current.size(); ++i) {
      if (should_merge(next.back(), current[i], text, threshold)) {
        next.back() = join(next.back(), current[i], text);
        changed = true;
      } else {
        next.push_back(current[i]);
      }
    }
    current = std::move(next);
  }
  return current;
}

std::vector<LabeledSpan> filter_spans(std::span<const LabeledSpan> spans, std::string_view language) {
  std::vector<LabeledSpan> kept;
  for (const auto& span : spans) {
    const std::u32string_view t = trim(span.text);
    if (t.size() < 2) continue;
    if (std::all_of(t.begin(), t.end(), [](char32_t c) { return is_punct(c) || is_space(c); })) continue;
    if (is_stop_word(t, language)) continue;
    kept.push_back(span);
  }
  return kept;
}

void SeqTrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("invalid training config: " + what); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) fail("peak_lr must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) fail("warmup_fraction must be in [0, 1]");
  if (weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (!(non_o_loss_weight > 0.0)) fail("non_o_loss_weight must be positive");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
  if (window == 0 || overlap >= window) fail("window must exceed overlap");
}

nlohmann::json SeqTrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"peak_lr", peak_lr},
          {"warmup_fraction", warmup_fraction},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"non_o_loss_weight", non_o_loss_weight},
          {"dropout", dropout},
          {"window", window},
          {"overlap", overlap},
          {"seed", seed},
          {"unknown_variant", unknown_variant}};
}

SeqTrainConfig SeqTrainConfig::from_json(const nlohmann::json& j) {
  SeqTrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.peak_lr = j.value("peak_lr", c.peak_lr);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.non_o_loss_weight = j.value("non_o_loss_weight", c.non_o_loss_weight);
  c.dropout = j.value("dropout", c.dropout);
  c.window = j.value("window", c.window);
  c.overlap = j.value("overlap", c.overlap);
  c.seed = j.value("seed", c.seed);
  c.unknown_variant = j.value("unknown_variant", c.unknown_variant);
  return c;
}

SequenceLabeler::SequenceLabeler(std::unique_ptr<TokenEncoder> encoder, std::size_t num_tags,
                                 std::uint64_t seed)
    : encoder_(std::move(encoder)), crf_(num_tags) {
  if (!encoder_) throw std::invalid_argument("sequence labeler needs an encoder");
  head_ = Linear(encoder_->dim(), num_tags);
  Rng rng(seed ^ 0x5e9u);
  head_.initialize(rng);
  for (std::size_t j = 1; j < num_tags; ++j) head_.bias(0, j) += crf_.init_bias;
}

SequenceLabeler::SequenceLabeler(const SequenceLabeler& other)
    : window(other.window),
      overlap(other.overlap),
      merge_threshold(other.merge_threshold),
      selection(other.selection),
      encoder_(other.encoder_->clone()),
      head_(other.head_),
      crf_(other.crf_) {}

SequenceLabeler& SequenceLabeler::operator=(const SequenceLabeler& other) {
  if (this != &other) *this = SequenceLabeler(other);
  return *this;
}

Matrix SequenceLabeler::emissions(std::span<const std::u32string> tokens) const {
  return head_.forward(encoder_->encode(tokens));
}

SequenceLabeler::Decoded SequenceLabeler::decode(std::u32string_view text) const {
  Decoded out;
  out.tokens = tokenize(text);
  const std::size_t n = out.tokens.size();
  if (n == 0) return out;
  const auto windows = split_windows(n, window, overlap);
  std::vector<TagSequence> window_tags;
  std::vector<std::vector<double>> window_conf;
  for (const auto& w : windows) {
    std::vector<std::u32string> surfaces;
    for (std::size_t i = w.start; i < w.end; ++i) surfaces.push_back(out.tokens[i].surface);
    const Matrix scores = apply_inference_shift(emissions(surfaces), crf_.inference_shift);
    TagSequence tags = viterbi_decode(scores, crf_);
    const CrfMarginals marginals = crf_marginals(scores, crf_);
    std::vector<double> conf(tags.size());
    for (std::size_t t = 0; t < tags.size(); ++t) conf[t] = marginals.unary(t, tag_index(tags[t]));
    window_tags.push_back(std::move(tags));
    window_conf.push_back(std::move(conf));
  }
  const auto owner = window_owners(windows, n);
  out.confidence.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    out.confidence[pos] = window_conf[owner[pos]][pos - windows[owner[pos]].start];
  }
  out.tags = merge_window_predictions(windows, window_tags, n);
  return out;
}

std::vector<LabeledSpan> label_article(const ArticleDocument& doc, const SequenceLabeler& model) {
  if (doc.text.empty()) return {};
  const auto decoded = model.decode(doc.text);
  auto spans = spans_from_bio(decoded.tags, decoded.tokens, doc.text, decoded.confidence);
  std::erase_if(spans, [](const LabeledSpan& s) { return s.main_role == MainRole::Unknown; });
  spans = merge_spans(spans, doc.text, model.merge_threshold);
  return filter_spans(spans, doc.language);
}

void SequenceLabeler::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  encoder_->save(dir / "encoder");
  Matrix start(1, crf_.num_tags()), end(1, crf_.num_tags());
  std::copy(crf_.start.begin(), crf_.start.end(), start.data().begin());
  std::copy(crf_.end.begin(), crf_.end.end(), end.data().begin());
  save_tensors(dir / "labeler.bin", {{"head.weight", head_.weight},
                                     {"head.bias", head_.bias},
                                     {"crf.transitions", crf_.transitions},
                                     {"crf.start", start},
                                     {"crf.end", end}});
  const nlohmann::json config = {{"kind", "sequence-labeler"},
                                 {"num_tags", crf_.num_tags()},
                                 {"window", window},
                                 {"overlap", overlap},
                                 {"merge_threshold", merge_threshold},
                                 {"init_bias", crf_.init_bias},
                                 {"inference_shift", crf_.inference_shift},
                                 {"selection", selection}};
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
}

SequenceLabeler SequenceLabeler::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw std::runtime_error("missing config.json in " + dir.string());
  const auto config = nlohmann::json::parse(in);
  if (config.value("kind", "") != "sequence-labeler") {
    throw std::runtime_error(dir.string() + " is not a sequence labeler checkpoint");
  }
  SequenceLabeler model(load_encoder(dir / "encoder"), config.at("num_tags").get<std::size_t>(), 0);
  model.window = config.at("window").get<std::size_t>();
  model.overlap = config.at("overlap").get<std::size_t>();
  model.merge_threshold = config.at("merge_threshold").get<double>();
  model.crf_.init_bias = config.at("init_bias").get<double>();
  model.crf_.inference_shift = config.at("inference_shift").get<double>();
  model.selection = config.value("selection", nlohmann::json::object());

  auto tensors = load_tensors(dir / "labeler.bin");
  auto take = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = tensors.find(name);
    if (it == tensors.end() || it->second.rows() != rows || it->second.cols() != cols) {
      throw std::runtime_error("labeler checkpoint missing or misshapen: " + name);
    }
    return std::move(it->second);
  };
  const std::size_t tags = model.num_tags();
  const std::size_t dim = model.encoder_->dim();
  model.head_.weight = take("head.weight", dim, tags);
  model.head_.bias = take("head.bias", 1, tags);
  model.crf_.transitions = take("crf.transitions", tags, tags);
  const Matrix start = take("crf.start", 1, tags);
  const Matrix end = take("crf.end", 1, tags);
  model.crf_.start.assign(start.data().begin(), start.data().end());
  model.crf_.end.assign(end.data().begin(), end.data().end());
  return model;
}

nlohmann::json SeqTrainReport::to_json() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"dev_f1", e.dev_f1},
                           {"dev_exact_match", e.dev_exact_match},
                           {"learning_rate", e.learning_rate}});
  }
  return {{"epochs", epochs_json},
          {"best_epoch", best_epoch},
          {"best_dev_f1", best_dev_f1},
          {"selection_metric", "span_micro_f1"},
          {"selection_split", selection_split},
          {"conversion", nlohmann::json::parse(conversion.to_json())}};
}

namespace {

struct TrainingWindow {
  std::string article_id;
  std::vector<std::u32string> tokens;
  TagSequence gold;
  double weight = 1.0;
};

std::vector<TrainingWindow> build_windows(const Dataset& data, const SeqTrainConfig& config,
                                          ConversionReport& report) {
  std::vector<TrainingWindow> out;
  for (const auto& entry : data) {
    const Tokenization tok = tokenize(entry.document.text);
    if (tok.empty()) continue;
    TagSequence tags = to_bio(entry.document, entry.annotations, tok, &report);
    if (!config.unknown_variant) {
      for (Tag& t : tags) {
        if (t != Tag::O && tag_role(t) == MainRole::Unknown) t = Tag::O;
      }
    }
    for (const auto& w : split_windows(tok.size(), config.window, config.overlap)) {
      TrainingWindow tw;
      tw.article_id = entry.document.id;
      for (std::size_t i = w.start; i < w.end; ++i) tw.tokens.push_back(tok[i].surface);
      tw.gold.assign(tags.begin() + static_cast<std::ptrdiff_t>(w.start),
                     tags.begin() + static_cast<std::ptrdiff_t>(w.end));
      // A window may open inside a span.
      repair_bio(tw.gold);
      double total = 0.0;
      for (Tag t : tw.gold) total += t == Tag::O ? 1.0 : config.non_o_loss_weight;
      tw.weight = total / static_cast<double>(tw.gold.size());
      out.push_back(std::move(tw));
    }
  }
  return out;
}

struct SpanScores {
  double f1 = 0.0;
  double exact_match = 0.0;
};

SpanScores score_spans(const Dataset& data, const SequenceLabeler& model) {
  std::vector<DocumentSpans> docs;
  for (const auto& entry : data) {
    DocumentSpans d;
    d.article_id = entry.document.id;
    d.predicted = label_article(entry.document, model);
    for (const auto& a : entry.annotations) {
      if (a.main_role != MainRole::Unknown) d.gold.push_back(a);
    }
    docs.push_back(std::move(d));
  }
  SpanScores scores;
  scores.f1 = dedup_prf(docs).micro.f1;
  scores.exact_match = exact_match_summary(docs).accuracy.value_or(0.0);
  return scores;
}

}  // namespace

SeqTrainResult train_sequence_labeler(const Dataset& train, const Dataset& dev,
                                      std::unique_ptr<TokenEncoder> encoder,
                                      const SeqTrainConfig& config) {
  config.validate();
  const std::size_t num_tags = config.unknown_variant ? kNumTagsWithUnknown : kNumTags;
  SequenceLabeler model(std::move(encoder), num_tags, config.seed);
  model.window = config.window;
  model.overlap = config.overlap;

  SeqTrainReport report;
  report.selection_split = dev.empty() ? "train" : "dev";
  const Dataset& selection_data = dev.empty() ? train : dev;
  auto windows = build_windows(train, config, report.conversion);
  if (config.epochs == 0) return {std::move(model), std::move(report)};
  if (windows.empty()) throw ValidationError("training set has no tokens");

  CrfParams& crf = model.crf();
  Matrix transitions_grad(num_tags, num_tags);
  std::vector<double> start_grad(num_tags, 0.0), end_grad(num_tags, 0.0);
  std::vector<ParamRef> params = model.encoder().parameters();
  for (auto& p : model.head().parameters("head")) params.push_back(p);
  params.push_back({"crf.transitions", crf.transitions.data(), transitions_grad.data(), false});
  params.push_back({"crf.start", crf.start, start_grad, false});
  params.push_back({"crf.end", crf.end, end_grad, false});
  AdamWConfig adam;
  adam.weight_decay = config.weight_decay;
  AdamW optimizer(params, adam);

  Rng rng(config.seed);
  const std::size_t batches_per_epoch = (windows.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches_per_epoch * config.epochs;
  std::size_t step = 0;
  std::optional<SequenceLabeler> best;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(windows, rng);
    double epoch_loss = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < windows.size(); b += config.batch_size) {
      const std::size_t batch_end = std::min(b + config.batch_size, windows.size());
      const double scale = 1.0 / static_cast<double>(batch_end - b);
      for (std::size_t k = b; k < batch_end; ++k) {
        const auto& w = windows[k];
        std::any trace;
        Matrix hidden = model.encoder().encode(w.tokens, &trace);
        const Matrix mask = dropout_mask(hidden.rows(), hidden.cols(), config.dropout, rng);
        apply_mask(hidden, mask);
        const Matrix scores = model.head().forward(hidden);
        CrfGradient g = crf_nll_gradient(scores, crf, w.gold);
        const double loss = g.loss * w.weight;
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss in article " << w.article_id << " (epoch " << epoch << ", step "
              << step << ", " << w.tokens.size() << " tokens)";
          throw std::runtime_error(msg.str());
        }
        epoch_loss += loss;
        const double factor = w.weight * scale;
        for (double& v : g.emissions.data()) v *= factor;
        Matrix grad_hidden = model.head().backward(hidden, g.emissions);
        apply_mask(grad_hidden, mask);
        model.encoder().backward(trace, grad_hidden);
        for (std::size_t i = 0; i < num_tags; ++i) {
          start_grad[i] += g.start[i] * factor;
          end_grad[i] += g.end[i] * factor;
          for (std::size_t j = 0; j < num_tags; ++j) transitions_grad(i, j) += g.transitions(i, j) * factor;
        }
      }
      lr = cosine_schedule(step, total_steps, config.peak_lr, config.warmup_fraction);
      optimizer.step(lr);
      ++step;
    }

    const SpanScores scores = score_spans(selection_data, model);
    report.epochs.push_back({epoch, epoch_loss / static_cast<double>(windows.size()), scores.f1,
                             scores.exact_match, lr});
    if (!best || scores.f1 > report.best_dev_f1) {
      report.best_dev_f1 = scores.f1;
      report.best_epoch = epoch;
      best = model;
    }
  }

  SequenceLabeler selected = std::move(*best);
  selected.selection = {{"metric", "span_micro_f1"},
                        {"split", report.selection_split},
                        {"epoch", report.best_epoch},
                        {"value", report.best_dev_f1},
                        {"config", config.to_json()}};
  return {std::move(selected), std::move(report)};
}

}  // namespace framing
