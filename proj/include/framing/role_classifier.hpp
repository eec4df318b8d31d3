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

// Stage 2: fine-grained role assignment for a detected span. The mention and
// up to 150 characters on each side are encoded, pooled and scored against
// all 22 roles; roles outside the span's main role are masked in both the
// loss and the decoder.

#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "framing/corpus.hpp"
#include "framing/encoder.hpp"
#include "framing/nn.hpp"
#include "framing/taxonomy.hpp"

namespace framing {

inline constexpr std::size_t kContextWindow = 150;
inline constexpr double kDecodeThreshold = 0.01;
inline constexpr double kDecodeMargin = 0.05;
inline constexpr double kLossEpsilon = 1e-8;
inline constexpr std::u32string_view kMentionOpen = U"[E]";
inline constexpr std::u32string_view kMentionClose = U"[/E]";

struct ContextWindow {
  std::u32string left;
  std::u32string mention;
  std::u32string right;
};

// left = text[max(0, start - window), start), right = text[end, end + window).
ContextWindow extract_context(std::u32string_view text, std::size_t start, std::size_t end,
                              std::size_t window = kContextWindow);

struct ClassificationInstance {
  std::string article_id;
  std::string language;
  std::size_t start = 0;
  std::size_t end = 0;
  std::u32string left_context;
  std::u32string mention;
  std::u32string right_context;
  MainRole main_role = MainRole::Protagonist;
  FineRoleSet gold_fine;  // empty at inference time
};

// Throws ValidationError for a non-canonical main role or gold roles outside
// its mask.
void validate_instance(const ClassificationInstance& instance);

// One instance per non-Unknown annotation, in dataset order.
std::vector<ClassificationInstance> build_instances(const Dataset& data,
                                                    std::size_t window = kContextWindow);

// Encoder input: left tokens, [E], mention tokens, [/E], right tokens.
// `mention_begin`/`mention_end` bracket the markers inclusively.
struct RenderedInstance {
  std::vector<std::u32string> tokens;
  std::size_t mention_begin = 0;
  std::size_t mention_end = 0;  // exclusive
};
RenderedInstance render_instance(const ClassificationInstance& instance);

// w_c = ln(1 + N / count_c) with zero counts raised to 1, rescaled to mean 1.
// N is the raw label total and must be positive.
RoleMask compute_class_weights(const std::array<double, kNumFineRoles>& counts);

struct MaskedLossInputs {
  RoleMask y{};
  RoleMask logits{};
  RoleMask mask{};
  RoleMask weights{};
  double eps = kLossEpsilon;
};

// sum_i w_i BCE(y_i, logit_i) m_i / (sum_i m_i + eps), BCE in logit form.
// Throws std::invalid_argument on a non-finite logit.
double masked_weighted_bce(const MaskedLossInputs& in);
// d loss / d logit_i = w_i m_i (sigmoid(logit_i) - y_i) / (sum m + eps).
RoleMask masked_weighted_bce_gradient(const MaskedLossInputs& in);

struct FineRolePrediction {
  std::vector<std::pair<FineRole, double>> roles;  // probability descending

  FineRoleSet role_set() const;
  double top_probability() const { return roles.empty() ? 0.0 : roles.front().second; }
  nlohmann::json to_json() const;
};

// Keeps roles of `main` with p > threshold and p >= max - margin. When none
// pass, returns the single most probable child of `main`. Probabilities
// outside the mask are ignored.
FineRolePrediction margin_decode(const RoleMask& probs, MainRole main,
                                 double threshold = kDecodeThreshold,
                                 double margin = kDecodeMargin);

struct ClsTrainConfig {
  double peak_lr = 2e-5;
  std::size_t batch_size = 3;
  std::size_t epochs = 10;
  double weight_decay = 0.01;
  std::size_t patience = 3;
  std::uint64_t seed = 42;
  std::size_t context_window = kContextWindow;
  double dropout = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static ClsTrainConfig from_json(const nlohmann::json& j);
};

class RoleClassifier {
 public:
  RoleClassifier(std::unique_ptr<TokenEncoder> encoder, std::uint64_t seed);
  RoleClassifier(const RoleClassifier& other);
  RoleClassifier& operator=(const RoleClassifier& other);
  RoleClassifier(RoleClassifier&&) noexcept = default;
  RoleClassifier& operator=(RoleClassifier&&) noexcept = default;

  TokenEncoder& encoder() { return *encoder_; }
  const TokenEncoder& encoder() const { return *encoder_; }
  Linear& head() { return head_; }

  std::size_t context_window = kContextWindow;
  double threshold = kDecodeThreshold;
  double margin = kDecodeMargin;
  RoleMask class_weights;
  nlohmann::json selection;

  // Mention-mean and all-token-mean of the encoder output, concatenated.
  Matrix pooled(const RenderedInstance& rendered, std::any* trace = nullptr) const;
  RoleMask logits(const ClassificationInstance& instance) const;
  // Sigmoid of the logits with non-children of the main role set to 0.
  RoleMask probabilities(const ClassificationInstance& instance) const;
  FineRolePrediction predict(const ClassificationInstance& instance) const;

  void save(const std::filesystem::path& dir) const;
  static RoleClassifier load(const std::filesystem::path& dir);

 private:
  std::unique_ptr<TokenEncoder> encoder_;
  Linear head_;
};

// Throws ValidationError for an Unknown span.
FineRolePrediction classify_span(const ArticleDocument& doc, const LabeledSpan& span,
                                 const RoleClassifier& model);

struct ClsEpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_micro_f1 = 0.0;
  double dev_exact_match = 0.0;
};

struct ClsTrainReport {
  std::vector<ClsEpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_micro_f1 = 0.0;
  bool stopped_early = false;
  std::string selection_split;
  nlohmann::json to_json() const;
};

struct ClsTrainResult {
  RoleClassifier model;
  ClsTrainReport report;
};

// Class weights come from the training instances. Early-stops on dev
// micro-F1 (training set when dev is empty). Throws ValidationError on an
// empty training set.
ClsTrainResult train_role_classifier(std::span<const ClassificationInstance> train,
                                     std::span<const ClassificationInstance> dev,
                                     std::unique_ptr<TokenEncoder> encoder,
                                     const ClsTrainConfig& config);

std::vector<FineRoleSet> predict_sets(const RoleClassifier& model,
                                      std::span<const ClassificationInstance> instances);

// {article_id, start, end, main_role, fine_roles: [{role, p}]}
nlohmann::json prediction_record(const ClassificationInstance& instance,
                                 const FineRolePrediction& prediction);

}  // namespace framing
