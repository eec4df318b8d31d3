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

// Command-line entry point: data preparation, training, labeling, evaluation
// and the analysis server.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "framing/augmentation.hpp"
#include "framing/baselines.hpp"
#include "framing/corpus.hpp"
#include "framing/encoder.hpp"
#include "framing/evaluation.hpp"
#include "framing/http_server.hpp"
#include "framing/role_classifier.hpp"
#include "framing/sequence_labeler.hpp"
#include "framing/service.hpp"
#include "framing/taxonomy.hpp"
#include "framing/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace framing;

namespace {

void write_json(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, body + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return json::parse(in);
}

// Every .txt file in `dir`, keyed by filename like load_dataset.
std::vector<ArticleDocument> load_articles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<ArticleDocument> docs;
  for (const auto& file : fs::directory_iterator(dir)) {
    if (!file.is_regular_file() || file.path().extension() != ".txt") continue;
    docs.push_back(make_document(file.path().filename().string(), read_text_file(file.path())));
  }
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return docs;
}

std::string strip_txt(std::string id) {
  if (id.size() > 4 && id.ends_with(".txt")) id.resize(id.size() - 4);
  return id;
}

struct DataPaths {
  fs::path articles, annotations, dev_articles, dev_annotations;

  void add_to(CLI::App* cmd, bool with_dev) {
    cmd->add_option("--articles", articles, "Directory of UTF-8 .txt articles")->required();
    cmd->add_option("--annotations", annotations, "Annotation TSV")->required();
    if (with_dev) {
      cmd->add_option("--dev-articles", dev_articles, "Development articles");
      cmd->add_option("--dev-annotations", dev_annotations, "Development annotation TSV");
    }
  }
  Dataset train() const { return load_dataset(articles, annotations); }
  Dataset dev() const {
    if (dev_articles.empty() != dev_annotations.empty()) {
      throw ValidationError("--dev-articles and --dev-annotations go together");
    }
    return dev_articles.empty() ? Dataset{} : load_dataset(dev_articles, dev_annotations);
  }
};

struct EncoderOptions {
  HashEncoderConfig config;
  void add_to(CLI::App* cmd) {
    cmd->add_option("--buckets", config.buckets, "Hashed feature buckets")->capture_default_str();
    cmd->add_option("--embedding-dim", config.embedding_dim)->capture_default_str();
    cmd->add_option("--hidden-dim", config.hidden_dim)->capture_default_str();
  }
};

int run_convert(const DataPaths& paths, const fs::path& out, const fs::path& report_path,
                bool keep_unknown) {
  const Dataset data = paths.train();
  ConversionReport report;
  std::ofstream os(out, std::ios::binary);
  if (!os) throw ValidationError("cannot write " + out.string());
  for (const auto& entry : data) {
    std::vector<GoldAnnotation> anns;
    for (const auto& a : entry.annotations) {
      if (keep_unknown || a.main_role != MainRole::Unknown) anns.push_back(a);
    }
    const Tokenization tok = tokenize(entry.document.text);
    const TagSequence tags = to_bio(entry.document, anns, tok, &report);
    json line = {{"article_id", entry.document.id}, {"tokens", json::array()}, {"tags", json::array()}};
    for (std::size_t i = 0; i < tok.size(); ++i) {
      line["tokens"].push_back({u32_to_utf8(tok[i].surface), tok[i].start, tok[i].end});
      line["tags"].push_back(tag_name(tags[i]));
    }
    os << line.dump() << '\n';
  }
  const std::string body = report.to_json();
  if (!report_path.empty()) write_json(report_path, body);
  std::cout << body << "\n";
  return 0;
}

int run_augment(const DataPaths& paths, const fs::path& out, const fs::path& log_path, bool unknown) {
  const Dataset data = paths.train();
  CapitalizedSequenceRecognizer recognizer;
  const AugmentationResult result = augment_dataset(data, unknown ? &recognizer : nullptr);
  std::vector<GoldAnnotation> all;
  for (const auto& entry : result.data) all.insert(all.end(), entry.annotations.begin(), entry.annotations.end());
  write_annotations_tsv(out, all);
  if (!log_path.empty()) write_json(log_path, result.to_json().dump(2));
  std::cout << "gold " << result.gold << ", propagated " << result.propagated << ", unknown "
            << result.unknown << "\n";
  return 0;
}

int run_train_seq(const DataPaths& paths, const EncoderOptions& enc, SeqTrainConfig config,
                  const fs::path& config_file, const fs::path& out) {
  if (!config_file.empty()) config = SeqTrainConfig::from_json(read_json(config_file));
  const Dataset train = paths.train();
  const Dataset dev = paths.dev();
  auto result = train_sequence_labeler(train, dev, std::make_unique<HashEmbeddingEncoder>(enc.config), config);
  result.model.save(out);
  write_json(out / "report.json", result.report.to_json().dump(2));
  std::cout << "best epoch " << result.report.best_epoch << ", " << result.report.selection_split
            << " span micro-F1 " << result.report.best_dev_f1 << "\n";
  return 0;
}

int run_train_cls(const DataPaths& paths, const EncoderOptions& enc, ClsTrainConfig config,
                  const fs::path& config_file, const fs::path& out) {
  if (!config_file.empty()) config = ClsTrainConfig::from_json(read_json(config_file));
  const auto train = build_instances(paths.train(), config.context_window);
  const auto dev = build_instances(paths.dev(), config.context_window);
  auto result = train_role_classifier(train, dev, std::make_unique<HashEmbeddingEncoder>(enc.config), config);
  result.model.save(out);
  write_json(out / "report.json", result.report.to_json().dump(2));
  std::cout << "best epoch " << result.report.best_epoch << ", " << result.report.selection_split
            << " micro-F1 " << result.report.best_dev_micro_f1 << "\n";
  return 0;
}

int run_label(const fs::path& seq_dir, const fs::path& cls_dir, const fs::path& articles,
              const fs::path& out, const fs::path& records_path) {
  const SequenceLabeler labeler = SequenceLabeler::load(seq_dir);
  std::optional<RoleClassifier> classifier;
  if (!cls_dir.empty()) classifier = RoleClassifier::load(cls_dir);

  std::vector<GoldAnnotation> rows;
  std::vector<double> confidences;
  std::ofstream records;
  if (!records_path.empty()) records.open(records_path, std::ios::binary);
  for (const auto& doc : load_articles(articles)) {
    for (const auto& span : label_article(doc, labeler)) {
      GoldAnnotation row{doc.id, span.text, span.start, span.end, span.main_role, {}};
      if (classifier) {
        const FineRolePrediction fine = classify_span(doc, span, *classifier);
        row.fine_roles = fine.role_set();
        if (records.is_open()) {
          records << json({{"article_id", doc.id},
                           {"start", span.start},
                           {"end", span.end},
                           {"main_role", main_role_name(span.main_role)},
                           {"fine_roles", fine.to_json()}})
                         .dump()
                  << '\n';
        }
      }
      rows.push_back(std::move(row));
      confidences.push_back(span.confidence);
    }
  }
  write_annotations_tsv(out, rows, confidences);
  std::cout << rows.size() << " spans written to " << out.string() << "\n";
  return 0;
}

struct EvalOptions {
  fs::path pred, gold, train, report;
  bool baselines = false;
  std::uint64_t seed = 42;
};

int run_evaluate(const EvalOptions& opt) {
  std::map<std::string, PipelineDocument> docs;
  auto doc_for = [&](const std::string& id) -> PipelineDocument& {
    auto& d = docs[strip_txt(id)];
    d.article_id = strip_txt(id);
    return d;
  };
  std::vector<FineRoleSet> gold_sets;
  for (const auto& row : read_annotation_rows(opt.gold)) {
    if (row.annotation.main_role == MainRole::Unknown) continue;
    doc_for(row.annotation.article_id).gold.push_back(row.annotation);
    gold_sets.push_back(row.annotation.fine_roles);
  }
  for (const auto& row : read_annotation_rows(opt.pred)) {
    const auto& a = row.annotation;
    if (a.main_role == MainRole::Unknown) continue;
    doc_for(a.article_id).predicted.push_back(
        {LabeledSpan{a.start, a.end, a.mention, a.main_role, row.confidence.value_or(1.0)}, a.fine_roles});
  }
  std::vector<PipelineDocument> ordered;
  for (auto& [id, d] : docs) ordered.push_back(std::move(d));

  const EvaluationReport report = evaluate_pipeline(ordered);
  json out = json::parse(report.to_json());
  std::string table = report.format_table();

  if (opt.baselines) {
    std::vector<FineRoleSet> train_sets;
    if (!opt.train.empty()) {
      for (const auto& row : read_annotation_rows(opt.train)) {
        if (row.annotation.main_role != MainRole::Unknown) train_sets.push_back(row.annotation.fine_roles);
      }
    }
    const auto dist = fit_label_count_distribution(opt.train.empty() ? gold_sets : train_sets);
    const std::size_t n = gold_sets.size();
    const std::vector<std::pair<std::string, std::vector<FineRoleSet>>> runs = {
        {"random", random_baseline(dist, n, opt.seed)},
        {"top_k", topk_baseline(dist, dist.frequencies, n, opt.seed)},
        {"freq_weighted", freq_weighted_baseline(dist, dist.frequencies, n, opt.seed)}};
    json b = {{"seed", opt.seed},
              {"distribution_source", opt.train.empty() ? "gold" : "train"},
              {"instances", n}};
    table += "\nBaselines on gold spans (seed " + std::to_string(opt.seed) + ")\n";
    table += "Set         Prec   Rec    Mic    Mac    Acc    EMC\n";
    for (const auto& [name, sets] : runs) {
      const ClassificationMetrics m = classification_metrics(sets, gold_sets);
      b[name] = json::parse(classification_metrics_json(m));
      table += format_classification_row(name, m);
    }
    out["baselines"] = b;
  }
  if (!opt.report.empty()) write_json(opt.report, out.dump(2));
  std::cout << table;
  return 0;
}

HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int run_serve(ServiceConfig config) {
  if (config.labeler_dir.empty() || config.classifier_dir.empty()) {
    throw ValidationError("serve needs --seq-model and --cls-model (or FRAMING_SEQ_MODEL / FRAMING_CLS_MODEL)");
  }
  auto pipeline = ModelPipeline::load(config.labeler_dir, config.classifier_dir);
  SessionStore store(config.storage_root);
  AnalysisService service(pipeline, store, http_fetcher(config.fetch_timeout));
  HttpServer server(service, config.static_dir);
  const int port = server.bind(config.host, config.port);
  if (port < 0) throw std::runtime_error("cannot bind " + config.host + ":" + std::to_string(config.port));
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on http://" << config.host << ":" << port << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity framing: detect entities in news text and assign narrative roles"};
  app.require_subcommand(1);

  auto* taxonomy = app.add_subcommand("taxonomy", "Print the role taxonomy as JSON");
  fs::path taxonomy_out;
  taxonomy->add_option("--out", taxonomy_out, "Write to a file instead of stdout");

  DataPaths convert_paths;
  fs::path convert_out, convert_report;
  bool convert_unknown = false;
  auto* convert = app.add_subcommand("convert", "Convert character-offset annotations to BIO tags (JSONL)");
  convert_paths.add_to(convert, false);
  convert->add_option("--out", convert_out, "Output JSONL")->required();
  convert->add_option("--report", convert_report, "Conversion report JSON");
  convert->add_flag("--unknown", convert_unknown, "Keep Unknown spans as B/I-Unknown tags");

  DataPaths augment_paths;
  fs::path augment_out, augment_log;
  bool augment_unknown = false;
  auto* augment = app.add_subcommand("augment", "Propagate labels to aliases and optionally add Unknown spans");
  augment_paths.add_to(augment, false);
  augment->add_option("--out", augment_out, "Augmented annotation TSV")->required();
  augment->add_option("--log", augment_log, "Augmentation log JSON");
  augment->add_flag("--unknown", augment_unknown, "Add capitalized sequences as Unknown spans");

  DataPaths seq_paths;
  EncoderOptions seq_encoder;
  SeqTrainConfig seq_config;
  fs::path seq_config_file, seq_out;
  auto* train_seq = app.add_subcommand("train-seq", "Train the entity span labeler");
  seq_paths.add_to(train_seq, true);
  seq_encoder.add_to(train_seq);
  train_seq->add_option("--out", seq_out, "Checkpoint directory")->required();
  train_seq->add_option("--config", seq_config_file, "Training config JSON (overrides flags)");
  train_seq->add_option("--epochs", seq_config.epochs)->capture_default_str();
  train_seq->add_option("--lr", seq_config.peak_lr)->capture_default_str();
  train_seq->add_option("--batch-size", seq_config.batch_size)->capture_default_str();
  train_seq->add_option("--dropout", seq_config.dropout)->capture_default_str();
  train_seq->add_option("--seed", seq_config.seed)->capture_default_str();
  train_seq->add_flag("--unknown", seq_config.unknown_variant, "Nine-tag model with Unknown tags");

  DataPaths cls_paths;
  EncoderOptions cls_encoder;
  ClsTrainConfig cls_config;
  fs::path cls_config_file, cls_out;
  auto* train_cls = app.add_subcommand("train-cls", "Train the fine-grained role classifier");
  cls_paths.add_to(train_cls, true);
  cls_encoder.add_to(train_cls);
  train_cls->add_option("--out", cls_out, "Checkpoint directory")->required();
  train_cls->add_option("--config", cls_config_file, "Training config JSON (overrides flags)");
  train_cls->add_option("--epochs", cls_config.epochs)->capture_default_str();
  train_cls->add_option("--lr", cls_config.peak_lr)->capture_default_str();
  train_cls->add_option("--batch-size", cls_config.batch_size)->capture_default_str();
  train_cls->add_option("--patience", cls_config.patience)->capture_default_str();
  train_cls->add_option("--dropout", cls_config.dropout)->capture_default_str();
  train_cls->add_option("--seed", cls_config.seed)->capture_default_str();

  fs::path label_seq, label_cls, label_articles, label_out, label_records;
  auto* label = app.add_subcommand("label", "Run the pipeline over a directory of articles");
  label->add_option("--seq-model", label_seq, "Span labeler checkpoint")->required();
  label->add_option("--cls-model", label_cls, "Role classifier checkpoint");
  label->add_option("--articles", label_articles, "Directory of .txt articles")->required();
  label->add_option("--out", label_out, "Prediction TSV with a confidence column")->required();
  label->add_option("--records", label_records, "Role prediction records (JSONL)");

  EvalOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold annotations");
  evaluate->add_option("--pred", eval.pred, "Prediction TSV")->required();
  evaluate->add_option("--gold", eval.gold, "Gold TSV")->required();
  evaluate->add_option("--report", eval.report, "Report JSON");
  evaluate->add_flag("--baselines", eval.baselines, "Add random, top-k and frequency-weighted baselines");
  evaluate->add_option("--seed", eval.seed, "Baseline seed")->capture_default_str();
  evaluate->add_option("--train", eval.train, "Training TSV for the baseline label distribution");

  ServiceConfig serve_config;
  auto* serve = app.add_subcommand("serve", "Start the analysis HTTP server");
  serve->add_option("--seq-model", serve_config.labeler_dir);
  serve->add_option("--cls-model", serve_config.classifier_dir);
  serve->add_option("--storage", serve_config.storage_root);
  serve->add_option("--static", serve_config.static_dir, "Browser client assets");
  serve->add_option("--host", serve_config.host);
  serve->add_option("--port", serve_config.port);
  // Environment first, flags on top.
  serve->preparse_callback([&](std::size_t) { serve_config = ServiceConfig::from_env(); });

  CLI11_PARSE(app, argc, argv);

  try {
    if (*taxonomy) {
      if (taxonomy_out.empty()) std::cout << taxonomy_json() << "\n";
      else write_json(taxonomy_out, taxonomy_json());
      return 0;
    }
    if (*convert) return run_convert(convert_paths, convert_out, convert_report, convert_unknown);
    if (*augment) return run_augment(augment_paths, augment_out, augment_log, augment_unknown);
    if (*train_seq) return run_train_seq(seq_paths, seq_encoder, seq_config, seq_config_file, seq_out);
    if (*train_cls) return run_train_cls(cls_paths, cls_encoder, cls_config, cls_config_file, cls_out);
    if (*label) return run_label(label_seq, label_cls, label_articles, label_out, label_records);
    if (*evaluate) return run_evaluate(eval);
    if (*serve) return run_serve(serve_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
