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

// Stage 1: windowed token encoding, emission scoring, CRF training and
// decoding, window merging and span post-processing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "framing/corpus.hpp"
#include "framing/crf.hpp"
#include "framing/encoder.hpp"
#include "framing/nn.hpp"

namespace framing {

// Token range [start, end) of one encoder window.
struct TokenWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const TokenWindow&) const = default;
};

// Windows start every max_len - overlap tokens; the last one is clipped to
// the document end and no window lies entirely inside its predecessor.
std::vector<TokenWindow> split_windows(std::size_t num_tokens, std::size_t max_len = 1024,
                                       std::size_t overlap = 256);

// For each token, the index of the window where it sits farthest from either
// edge (min of distance to start and to end). Ties go to the earlier window.
std::vector<std::size_t> window_owners(std::span<const TokenWindow> windows, std::size_t num_tokens);

// Stitches per-window tags into one document sequence using window_owners and
// repairs orphan inside tags left at the seams.
TagSequence merge_window_predictions(std::span<const TokenWindow> windows,
                                     std::span<const TagSequence> window_tags,
                                     std::size_t num_tokens);

inline constexpr double kMergeThreshold = 0.5;
inline constexpr double kGapPenalty = 0.8;
inline constexpr std::size_t kMaxMergeGap = 3;

// Joins neighbouring same-role spans separated by at most one token and at
// most three characters when min(confidence) times the gap factor (1 for
// touching spans, 0.8 otherwise) reaches `threshold`. The merged confidence is
// the length-weighted mean. Repeats until no pair merges, so the result is a
// fixpoint. `spans` must be sorted by start.
std::vector<LabeledSpan> merge_spans(std::span<const LabeledSpan> spans, std::u32string_view text,
                                     double threshold = kMergeThreshold);

// Drops spans that after trimming are all punctuation, a single stop word of
// `language`, or shorter than two characters.
std::vector<LabeledSpan> filter_spans(std::span<const LabeledSpan> spans, std::string_view language);

struct SeqTrainConfig {
  std::size_t epochs = 20;
  double peak_lr = 1e-5;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;
  std::size_t batch_size = 2;
  double non_o_loss_weight = 2.0;
  double dropout = 0.1;
  std::size_t window = 1024;
  std::size_t overlap = 256;
  std::uint64_t seed = 42;
  // Nine-tag variant with B/I-Unknown.
  bool unknown_variant = false;

  // Throws ValidationError.
  void validate() const;
  nlohmann::json to_json() const;
  static SeqTrainConfig from_json(const nlohmann::json& j);
};

class SequenceLabeler {
 public:
  SequenceLabeler(std::unique_ptr<TokenEncoder> encoder, std::size_t num_tags, std::uint64_t seed);
  SequenceLabeler(const SequenceLabeler& other);
  SequenceLabeler& operator=(const SequenceLabeler& other);
  SequenceLabeler(SequenceLabeler&&) noexcept = default;
  SequenceLabeler& operator=(SequenceLabeler&&) noexcept = default;

  std::size_t num_tags() const { return crf_.num_tags(); }
  const CrfParams& crf() const { return crf_; }
  CrfParams& crf() { return crf_; }
  TokenEncoder& encoder() { return *encoder_; }
  const TokenEncoder& encoder() const { return *encoder_; }
  Linear& head() { return head_; }
  const Linear& head() const { return head_; }

  std::size_t window = 1024;
  std::size_t overlap = 256;
  double merge_threshold = kMergeThreshold;
  // Free-form record of how this checkpoint was selected.
  nlohmann::json selection;

  // Raw emission scores, one row per token.
  Matrix emissions(std::span<const std::u32string> tokens) const;

  // Per-token tags and the marginal probability of each chosen tag.
  struct Decoded {
    Tokenization tokens;
    TagSequence tags;
    std::vector<double> confidence;
  };
  Decoded decode(std::u32string_view text) const;

  void save(const std::filesystem::path& dir) const;
  static SequenceLabeler load(const std::filesystem::path& dir);

 private:
  std::unique_ptr<TokenEncoder> encoder_;
  Linear head_;
  CrfParams crf_;
};

// tokenize, window, score, shift, decode, merge windows, extract, merge spans,
// filter. Unknown spans are dropped. Output is sorted and non-overlapping.
std::vector<LabeledSpan> label_article(const ArticleDocument& doc, const SequenceLabeler& model);

struct SeqEpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  double dev_exact_match = 0.0;
  double learning_rate = 0.0;
};

struct SeqTrainReport {
  std::vector<SeqEpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_dev_f1 = 0.0;
  std::string selection_split;
  ConversionReport conversion;
  nlohmann::json to_json() const;
};

struct SeqTrainResult {
  SequenceLabeler model;
  SeqTrainReport report;
};

// Minimizes the CRF negative log-likelihood of each window, scaled by the
// mean token weight (non-O gold tokens weigh non_o_loss_weight). Keeps the
// epoch with the best dev span micro-F1; an empty dev set selects on the
// training set. Throws std::runtime_error on a non-finite loss.
SeqTrainResult train_sequence_labeler(const Dataset& train, const Dataset& dev,
                                      std::unique_ptr<TokenEncoder> encoder,
                                      const SeqTrainConfig& config);

}  // namespace framing
