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

#include "framing/role_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "framing/evaluation.hpp"
#include "framing/random.hpp"

namespace framing {

ContextWindow extract_context(std::u32string_view text, std::size_t start, std::size_t end,
                              std::size_t window) {
  if (start >= end || end > text.size()) throw std::invalid_argument("invalid span");
  const std::size_t left = start > window ? start - window : 0;
  const std::size_t right = std::min(text.size(), end + window);
  return {std::u32string(text.substr(left, start - left)), std::u32string(text.substr(start, end - start)),
          std::u32string(text.substr(end, right - end))};
}

void validate_instance(const ClassificationInstance& instance) {
  if (instance.main_role == MainRole::Unknown) {
    throw ValidationError("classification instance with Unknown main role");
  }
  if (!instance.gold_fine.empty()) validate_assignment(instance.main_role, instance.gold_fine);
}

std::vector<ClassificationInstance> build_instances(const Dataset& data, std::size_t window) {
  std::vector<ClassificationInstance> out;
  for (const auto& entry : data) {
    for (const auto& a : entry.annotations) {
      if (a.main_role == MainRole::Unknown) continue;
      auto ctx = extract_context(entry.document.text, a.start, a.end, window);
      ClassificationInstance inst{entry.document.id, entry.document.language, a.start, a.end,
                                  std::move(ctx.left), std::move(ctx.mention), std::move(ctx.right),
                                  a.main_role, a.fine_roles};
      validate_instance(inst);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

RenderedInstance render_instance(const ClassificationInstance& instance) {
  RenderedInstance r;
  for (auto& t : tokenize(instance.left_context)) r.tokens.push_back(std::move(t.surface));
  r.mention_begin = r.tokens.size();
  r.tokens.emplace_back(kMentionOpen);
  for (auto& t : tokenize(instance.mention)) r.tokens.push_back(std::move(t.surface));
  r.tokens.emplace_back(kMentionClose);
  r.mention_end = r.tokens.size();
  for (auto& t : tokenize(instance.right_context)) r.tokens.push_back(std::move(t.surface));
  return r;
}

RoleMask compute_class_weights(const std::array<double, kNumFineRoles>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("class weights need a positive label total");
  RoleMask w{};
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    const double count = counts[i] > 0.0 ? counts[i] : 1.0;
    w[i] = std::log1p(total / count);
  }
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(kNumFineRoles);
  for (double& x : w) x /= mean;
  return w;
}

double masked_weighted_bce(const MaskedLossInputs& in) {
  double numerator = 0.0, mask_total = 0.0;
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    const double x = in.logits[i];
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite logit");
    mask_total += in.mask[i];
    if (in.mask[i] == 0.0) continue;
    const double bce = std::max(x, 0.0) - x * in.y[i] + std::log1p(std::exp(-std::abs(x)));
    numerator += in.weights[i] * bce * in.mask[i];
  }
  return numerator / (mask_total + in.eps);
}

RoleMask masked_weighted_bce_gradient(const MaskedLossInputs& in) {
  const double denom = std::accumulate(in.mask.begin(), in.mask.end(), 0.0) + in.eps;
  RoleMask g{};
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    if (in.mask[i] == 0.0) continue;
    g[i] = in.weights[i] * in.mask[i] * (sigmoid(in.logits[i]) - in.y[i]) / denom;
  }
  return g;
}

FineRoleSet FineRolePrediction::role_set() const {
  FineRoleSet s;
  for (const auto& [role, p] : roles) s.insert(role);
  return s;
}

nlohmann::json FineRolePrediction::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [role, p] : roles) arr.push_back({{"role", fine_role_name(role)}, {"p", p}});
  return arr;
}

FineRolePrediction margin_decode(const RoleMask& probs, MainRole main, double threshold,
                                 double margin) {
  const auto children = fine_roles_of(main);
  if (children.empty()) throw ValidationError("no fine roles for main role " + std::string(main_role_name(main)));
  FineRole argmax = children.front();
  double max_p = -1.0;
  for (FineRole r : children) {
    if (probs[index_of(r)] > max_p) {
      max_p = probs[index_of(r)];
      argmax = r;
    }
  }
  FineRolePrediction out;
  for (FineRole r : children) {
    const double p = probs[index_of(r)];
    if (p > threshold && p >= max_p - margin) out.roles.emplace_back(r, p);
  }
  if (out.roles.empty()) out.roles.emplace_back(argmax, max_p);
  std::stable_sort(out.roles.begin(), out.roles.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

void ClsTrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("invalid training config: " + what); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) fail("peak_lr must be positive");
  if (weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (patience == 0) fail("patience must be positive");
  if (context_window == 0) fail("context_window must be positive");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
}

nlohmann::json ClsTrainConfig::to_json() const {
  return {{"peak_lr", peak_lr}, {"batch_size", batch_size},
          {"epochs", epochs},   {"weight_decay", weight_decay},
          {"patience", patience}, {"seed", seed},
          {"context_window", context_window}, {"dropout", dropout}};
}

ClsTrainConfig ClsTrainConfig::from_json(const nlohmann::json& j) {
  ClsTrainConfig c;
  c.peak_lr = j.value("peak_lr", c.peak_lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.context_window = j.value("context_window", c.context_window);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

RoleClassifier::RoleClassifier(std::unique_ptr<TokenEncoder> encoder, std::uint64_t seed)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw std::invalid_argument("role classifier needs an encoder");
  class_weights.fill(1.0);
  head_ = Linear(2 * encoder_->dim(), kNumFineRoles);
  Rng rng(seed ^ 0xc1a55u);
  head_.initialize(rng);
}

RoleClassifier::RoleClassifier(const RoleClassifier& other)
    : context_window(other.context_window),
      threshold(other.threshold),
      margin(other.margin),
      class_weights(other.class_weights),
      selection(other.selection),
      encoder_(other.encoder_->clone()),
      head_(other.head_) {}

RoleClassifier& RoleClassifier::operator=(const RoleClassifier& other) {
  if (this != &other) *this = RoleClassifier(other);
  return *this;
}

Matrix RoleClassifier::pooled(const RenderedInstance& rendered, std::any* trace) const {
  const Matrix hidden = encoder_->encode(rendered.tokens, trace);
  const std::size_t d = hidden.cols();
  Matrix out(1, 2 * d);
  const double mention_n = static_cast<double>(rendered.mention_end - rendered.mention_begin);
  const double all_n = static_cast<double>(hidden.rows());
  for (std::size_t t = 0; t < hidden.rows(); ++t) {
    const bool in_mention = t >= rendered.mention_begin && t < rendered.mention_end;
    for (std::size_t k = 0; k < d; ++k) {
      if (in_mention) out(0, k) += hidden(t, k) / mention_n;
      out(0, d + k) += hidden(t, k) / all_n;
    }
  }
  return out;
}

RoleMask RoleClassifier::logits(const ClassificationInstance& instance) const {
  const Matrix scores = head_.forward(pooled(render_instance(instance)));
  RoleMask out{};
  std::copy(scores.data().begin(), scores.data().end(), out.begin());
  return out;
}

RoleMask RoleClassifier::probabilities(const ClassificationInstance& instance) const {
  const RoleMask z = logits(instance);
  const RoleMask mask = mask_vector(instance.main_role);
  RoleMask p{};
  for (std::size_t i = 0; i < kNumFineRoles; ++i) p[i] = mask[i] > 0.0 ? sigmoid(z[i]) : 0.0;
  return p;
}

FineRolePrediction RoleClassifier::predict(const ClassificationInstance& instance) const {
  validate_instance(instance);
  return margin_decode(probabilities(instance), instance.main_role, threshold, margin);
}

FineRolePrediction classify_span(const ArticleDocument& doc, const LabeledSpan& span,
                                 const RoleClassifier& model) {
  if (span.main_role == MainRole::Unknown) {
    throw ValidationError("cannot classify an Unknown span");
  }
  auto ctx = extract_context(doc.text, span.start, span.end, model.context_window);
  ClassificationInstance inst{doc.id, doc.language, span.start, span.end, std::move(ctx.left),
                              std::move(ctx.mention), std::move(ctx.right), span.main_role, {}};
  return model.predict(inst);
}

void RoleClassifier::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  encoder_->save(dir / "encoder");
  save_tensors(dir / "classifier.bin", {{"head.weight", head_.weight}, {"head.bias", head_.bias}});
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    weights[std::string(fine_role_name(fine_role_at(i)))] = class_weights[i];
  }
  const nlohmann::json config = {{"kind", "role-classifier"},
                                 {"context_window", context_window},
                                 {"threshold", threshold},
                                 {"margin", margin},
                                 {"class_weights", weights},
                                 {"selection", selection}};
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
}

RoleClassifier RoleClassifier::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw std::runtime_error("missing config.json in " + dir.string());
  const auto config = nlohmann::json::parse(in);
  if (config.value("kind", "") != "role-classifier") {
    throw std::runtime_error(dir.string() + " is not a role classifier checkpoint");
  }
  RoleClassifier model(load_encoder(dir / "encoder"), 0);
  model.context_window = config.at("context_window").get<std::size_t>();
  model.threshold = config.at("threshold").get<double>();
  model.margin = config.at("margin").get<double>();
  for (const auto& [name, w] : config.at("class_weights").items()) {
    model.class_weights[index_of(parse_fine_role(name))] = w.get<double>();
  }
  model.selection = config.value("selection", nlohmann::json::object());
  auto tensors = load_tensors(dir / "classifier.bin");
  auto take = [&](const std::string& name, const Matrix& like) {
    auto it = tensors.find(name);
    if (it == tensors.end() || it->second.rows() != like.rows() || it->second.cols() != like.cols()) {
      throw std::runtime_error("classifier checkpoint missing or misshapen: " + name);
    }
    return std::move(it->second);
  };
  model.head_.weight = take("head.weight", model.head_.weight);
  model.head_.bias = take("head.bias", model.head_.bias);
  return model;
}

nlohmann::json ClsTrainReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : epochs) {
    arr.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"dev_micro_f1", e.dev_micro_f1},
                   {"dev_exact_match", e.dev_exact_match}});
  }
  return {{"epochs", arr},
          {"best_epoch", best_epoch},
          {"best_dev_micro_f1", best_dev_micro_f1},
          {"stopped_early", stopped_early},
          {"selection_metric", "micro_f1"},
          {"selection_split", selection_split}};
}

std::vector<FineRoleSet> predict_sets(const RoleClassifier& model,
                                      std::span<const ClassificationInstance> instances) {
  std::vector<FineRoleSet> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(model.predict(inst).role_set());
  return out;
}

nlohmann::json prediction_record(const ClassificationInstance& instance,
                                 const FineRolePrediction& prediction) {
  return {{"article_id", instance.article_id},
          {"start", instance.start},
          {"end", instance.end},
          {"main_role", main_role_name(instance.main_role)},
          {"fine_roles", prediction.to_json()}};
}

ClsTrainResult train_role_classifier(std::span<const ClassificationInstance> train,
                                     std::span<const ClassificationInstance> dev,
                                     std::unique_ptr<TokenEncoder> encoder,
                                     const ClsTrainConfig& config) {
  config.validate();
  if (train.empty()) throw ValidationError("empty training set");
  std::array<double, kNumFineRoles> counts{};
  for (const auto& inst : train) {
    validate_instance(inst);
    if (inst.gold_fine.empty()) throw ValidationError("training instance without fine roles");
    for (FineRole r : inst.gold_fine) counts[index_of(r)] += 1.0;
  }
  for (const auto& inst : dev) validate_instance(inst);

  RoleClassifier model(std::move(encoder), config.seed);
  model.context_window = config.context_window;
  model.class_weights = compute_class_weights(counts);

  ClsTrainReport report;
  report.selection_split = dev.empty() ? "train" : "dev";
  if (config.epochs == 0) return {std::move(model), std::move(report)};
  const auto selection_data = dev.empty() ? train : dev;
  std::vector<FineRoleSet> selection_gold;
  for (const auto& inst : selection_data) selection_gold.push_back(inst.gold_fine);

  std::vector<RenderedInstance> rendered;
  for (const auto& inst : train) rendered.push_back(render_instance(inst));

  std::vector<ParamRef> params = model.encoder().parameters();
  for (auto& p : model.head().parameters("head")) params.push_back(p);
  AdamWConfig adam;
  adam.weight_decay = config.weight_decay;
  AdamW optimizer(params, adam);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  const std::size_t batches = (train.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches * config.epochs;
  std::size_t step = 0, stale = 0;
  std::optional<RoleClassifier> best;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t batch_end = std::min(b + config.batch_size, order.size());
      const double scale = 1.0 / static_cast<double>(batch_end - b);
      for (std::size_t k = b; k < batch_end; ++k) {
        const auto& inst = train[order[k]];
        const auto& r = rendered[order[k]];
        std::any trace;
        Matrix features = model.pooled(r, &trace);
        const Matrix mask = dropout_mask(1, features.cols(), config.dropout, rng);
        apply_mask(features, mask);
        const Matrix scores = model.head().forward(features);

        MaskedLossInputs in;
        in.mask = mask_vector(inst.main_role);
        in.weights = model.class_weights;
        for (FineRole f : inst.gold_fine) in.y[index_of(f)] = 1.0;
        std::copy(scores.data().begin(), scores.data().end(), in.logits.begin());
        const double loss = masked_weighted_bce(in);
        if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss for " + inst.article_id);
        epoch_loss += loss;

        const RoleMask g = masked_weighted_bce_gradient(in);
        Matrix grad_scores(1, kNumFineRoles);
        for (std::size_t i = 0; i < kNumFineRoles; ++i) grad_scores(0, i) = g[i] * scale;
        Matrix grad_features = model.head().backward(features, grad_scores);
        apply_mask(grad_features, mask);

        // Undo the pooling: each token receives its share of both means.
        const std::size_t d = model.encoder().dim();
        const std::size_t n = r.tokens.size();
        const double mention_n = static_cast<double>(r.mention_end - r.mention_begin);
        Matrix grad_hidden(n, d);
        for (std::size_t t = 0; t < n; ++t) {
          const bool in_mention = t >= r.mention_begin && t < r.mention_end;
          for (std::size_t j = 0; j < d; ++j) {
            grad_hidden(t, j) = grad_features(0, d + j) / static_cast<double>(n) +
                                (in_mention ? grad_features(0, j) / mention_n : 0.0);
          }
        }
        model.encoder().backward(trace, grad_hidden);
      }
      optimizer.step(linear_schedule(step, total_steps, config.peak_lr));
      ++step;
    }

    const auto predicted = predict_sets(model, selection_data);
    const auto metrics = classification_metrics(predicted, selection_gold);
    report.epochs.push_back({epoch, epoch_loss / static_cast<double>(train.size()), metrics.micro_f1,
                             metrics.exact_match_set_accuracy});
    if (!best || metrics.micro_f1 > report.best_dev_micro_f1) {
      report.best_dev_micro_f1 = metrics.micro_f1;
      report.best_epoch = epoch;
      best = model;
      stale = 0;
    } else if (++stale >= config.patience) {
      report.stopped_early = epoch < config.epochs;
      break;
    }
  }

  RoleClassifier selected = std::move(*best);
  selected.selection = {{"metric", "micro_f1"},
                        {"split", report.selection_split},
                        {"epoch", report.best_epoch},
                        {"value", report.best_dev_micro_f1},
                        {"config", config.to_json()}};
  return {std::move(selected), std::move(report)};
}

}  // namespace framing
