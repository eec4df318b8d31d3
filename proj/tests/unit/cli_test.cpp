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

// Drives the command-line tool end to end on a small synthetic corpus.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "framing/corpus.hpp"
#include "framing/taxonomy.hpp"
#include "framing/text.hpp"
#include "synthetic.hpp"

using namespace framing;
using namespace framing::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  Workspace() {
    std::random_device rd;
    root = fs::temp_directory_path() / ("framing_cli_" + std::to_string(rd()));
    fs::create_directories(root);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  fs::path operator/(const std::string& p) const { return root / p; }
};

int run(const std::string& args) {
  const std::string cmd = std::string(FRAMING_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_dataset(const Dataset& data, const fs::path& dir, const fs::path& tsv) {
  fs::create_directories(dir);
  std::vector<GoldAnnotation> all;
  for (const auto& e : data) {
    write_text_file(dir / e.document.id, u32_to_utf8(e.document.text));
    for (auto a : e.annotations) {
      a.article_id = e.document.id.substr(0, e.document.id.size() - 4);
      all.push_back(a);
    }
  }
  write_annotations_tsv(tsv, all);
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("command-line workflow") {
  Workspace ws;
  write_dataset(synthetic_dataset(8, 3), ws / "articles", ws / "gold.tsv");

  REQUIRE(run("taxonomy --out " + (ws / "taxonomy.json").string()) == 0);
  CHECK(load(ws / "taxonomy.json") == json::parse(taxonomy_json()));

  REQUIRE(run("convert --articles " + (ws / "articles").string() + " --annotations " +
              (ws / "gold.tsv").string() + " --out " + (ws / "bio.jsonl").string() + " --report " +
              (ws / "conversion.json").string()) == 0);
  const json conversion = load(ws / "conversion.json");
  CHECK(conversion["converted"] == conversion["annotations"]);
  std::ifstream bio(ws / "bio.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(bio, line)) {
    const json j = json::parse(line);
    CHECK(j["tokens"].size() == j["tags"].size());
    ++lines;
  }
  CHECK(lines == 8);

  REQUIRE(run("augment --unknown --articles " + (ws / "articles").string() + " --annotations " +
              (ws / "gold.tsv").string() + " --out " + (ws / "augmented.tsv").string() + " --log " +
              (ws / "augment.json").string()) == 0);
  CHECK(read_annotation_rows(ws / "augmented.tsv").size() >= read_annotation_rows(ws / "gold.tsv").size());
  CHECK(load(ws / "augment.json").contains("documents"));

  const std::string data = " --articles " + (ws / "articles").string() + " --annotations " +
                           (ws / "gold.tsv").string();
  REQUIRE(run("train-seq" + data + " --epochs 2 --lr 0.05 --dropout 0 --buckets 2048 --out " +
              (ws / "seq").string()) == 0);
  CHECK(fs::exists(ws / "seq" / "config.json"));
  CHECK(load(ws / "seq" / "report.json")["epochs"].size() == 2);
  REQUIRE(run("train-cls" + data + " --epochs 2 --lr 0.02 --dropout 0 --buckets 2048 --out " +
              (ws / "cls").string()) == 0);
  CHECK(fs::exists(ws / "cls" / "classifier.bin"));

  REQUIRE(run("label --seq-model " + (ws / "seq").string() + " --cls-model " + (ws / "cls").string() +
              " --articles " + (ws / "articles").string() + " --out " + (ws / "pred.tsv").string() +
              " --records " + (ws / "records.jsonl").string()) == 0);
  for (const auto& row : read_annotation_rows(ws / "pred.tsv")) {
    CHECK(row.confidence.has_value());
    CHECK_NOTHROW(validate_assignment(row.annotation.main_role, row.annotation.fine_roles));
  }

  REQUIRE(run("evaluate --baselines --seed 7 --pred " + (ws / "pred.tsv").string() + " --gold " +
              (ws / "gold.tsv").string() + " --report " + (ws / "report.json").string()) == 0);
  const json report = load(ws / "report.json");
  CHECK(report["gold_spans"] == read_annotation_rows(ws / "gold.tsv").size());
  CHECK(report["baselines"]["seed"] == 7);
  for (const char* name : {"random", "top_k", "freq_weighted"}) CHECK(report["baselines"].contains(name));

  // Gold scored against itself is perfect.
  REQUIRE(run("evaluate --pred " + (ws / "gold.tsv").string() + " --gold " + (ws / "gold.tsv").string() +
              " --report " + (ws / "self.json").string()) == 0);
  const json self = load(ws / "self.json");
  CHECK(self["exact_match_accuracy"] == 1.0);
  CHECK(self["span_metrics"]["micro_f1"] == 1.0);
  CHECK(self["classification"]["metrics"]["exact_match_set_accuracy"] == 1.0);
}

TEST_CASE("command-line errors exit non-zero") {
  Workspace ws;
  CHECK(run("") != 0);
  CHECK(run("evaluate --pred " + (ws / "missing.tsv").string() + " --gold x.tsv") != 0);
  CHECK(run("serve --port 1") != 0);
}
