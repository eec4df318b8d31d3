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

#include <chrono>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "framing/evaluation.hpp"
#include "framing/sequence_labeler.hpp"
#include "framing/text.hpp"
#include "synthetic.hpp"
#include "toy_models.hpp"

using namespace framing;
using namespace framing::testing;
namespace fs = std::filesystem;

namespace {

LabeledSpan span(std::u32string_view text, std::size_t start, std::size_t end, MainRole role,
                 double confidence) {
  return {start, end, std::u32string(text.substr(start, end - start)), role, confidence};
}

std::unique_ptr<TokenEncoder> toy_encoder() { return std::make_unique<HashEmbeddingEncoder>(); }

}  // namespace

TEST_CASE("split_windows") {
  CHECK(split_windows(0).empty());
  CHECK(split_windows(1000) == std::vector<TokenWindow>{{0, 1000}});
  CHECK(split_windows(1024) == std::vector<TokenWindow>{{0, 1024}});
  CHECK(split_windows(1500) == std::vector<TokenWindow>{{0, 1024}, {768, 1500}});
  CHECK(split_windows(2600) ==
        std::vector<TokenWindow>{{0, 1024}, {768, 1792}, {1536, 2560}, {2304, 2600}});
  CHECK_THROWS_AS(split_windows(10, 4, 4), std::invalid_argument);

  for (std::size_t n = 1; n < 3000; n += 37) {
    const auto windows = split_windows(n, 100, 30);
    std::vector<int> covered(n, 0);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      CHECK(windows[k].start == 70 * k);
      CHECK(windows[k].end - windows[k].start <= 100);
      for (std::size_t i = windows[k].start; i < windows[k].end; ++i) covered[i] = 1;
    }
    CHECK(windows.back().end == n);
    CHECK(std::count(covered.begin(), covered.end(), 0) == 0);
  }
}

TEST_CASE("window owners prefer the most central window") {
  const std::vector<TokenWindow> windows{{0, 1024}, {768, 1792}};
  const auto owner = window_owners(windows, 1792);
  // 900: min(900, 124) = 124 in the first window, min(132, 892) = 132 in the second.
  CHECK(owner[900] == 1);
  CHECK(owner[800] == 0);
  CHECK(owner[10] == 0);
  CHECK(owner[1500] == 1);
  // 896: 128 in both windows, the earlier one wins.
  CHECK(owner[896] == 0);
  CHECK(owner[897] == 1);
}

TEST_CASE("merge_window_predictions") {
  const std::vector<TokenWindow> single{{0, 3}};
  const std::vector<TagSequence> tags{{Tag::BAntagonist, Tag::IAntagonist, Tag::O}};
  CHECK(merge_window_predictions(single, tags, 3) == tags[0]);

  // Token 3 comes from the second window, which sees it inside a span whose
  // start the first window owns and tags O.
  const std::vector<TokenWindow> windows{{0, 4}, {1, 5}};
  const std::vector<TagSequence> window_tags{
      {Tag::O, Tag::O, Tag::O, Tag::O},
      {Tag::O, Tag::BInnocent, Tag::IInnocent, Tag::O}};
  const auto owner = window_owners(windows, 5);
  CHECK(owner == std::vector<std::size_t>{0, 0, 0, 1, 1});
  const TagSequence merged = merge_window_predictions(windows, window_tags, 5);
  CHECK(merged == TagSequence{Tag::O, Tag::O, Tag::O, Tag::BInnocent, Tag::O});
}

TEST_CASE("merge_spans") {
  const std::u32string text = U"Vladimir Putin met the EU delegation";
  SUBCASE("gap of one space at 0.9 merges") {
    const std::vector<LabeledSpan> spans{span(text, 0, 8, MainRole::Antagonist, 0.9),
                                         span(text, 9, 14, MainRole::Antagonist, 0.9)};
    const auto merged = merge_spans(spans, text);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].text == U"Vladimir Putin");
    CHECK(merged[0].confidence == doctest::Approx(0.9));
  }
  SUBCASE("different roles never merge") {
    const std::vector<LabeledSpan> spans{span(text, 0, 8, MainRole::Antagonist, 1.0),
                                         span(text, 9, 14, MainRole::Protagonist, 1.0)};
    CHECK(merge_spans(spans, text).size() == 2);
  }
  SUBCASE("0.55 with a gap falls below threshold") {
    const std::vector<LabeledSpan> spans{span(text, 0, 8, MainRole::Antagonist, 0.55),
                                         span(text, 9, 14, MainRole::Antagonist, 0.6)};
    CHECK(merge_spans(spans, text).size() == 2);
  }
  SUBCASE("touching spans use factor 1") {
    const std::vector<LabeledSpan> spans{span(text, 0, 4, MainRole::Antagonist, 0.55),
                                         span(text, 4, 8, MainRole::Antagonist, 0.6)};
    const auto merged = merge_spans(spans, text);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].confidence == doctest::Approx(0.575));
  }
  SUBCASE("length-weighted confidence") {
    const std::vector<LabeledSpan> spans{span(text, 0, 8, MainRole::Antagonist, 0.9),
                                         span(text, 9, 14, MainRole::Antagonist, 0.7)};
    const auto merged = merge_spans(spans, text);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].confidence == doctest::Approx((0.9 * 8 + 0.7 * 5) / 13));
  }
  SUBCASE("gap longer than three characters or two tokens") {
    const std::vector<LabeledSpan> far{span(text, 0, 8, MainRole::Antagonist, 1.0),
                                       span(text, 19, 22, MainRole::Antagonist, 1.0)};
    CHECK(merge_spans(far, text).size() == 2);
    const std::u32string t2 = U"A a b C";
    const std::vector<LabeledSpan> two_tokens{span(t2, 0, 1, MainRole::Innocent, 1.0),
                                              span(t2, 6, 7, MainRole::Innocent, 1.0)};
    CHECK(merge_spans(two_tokens, t2).size() == 2);
    const std::u32string t3 = U"A & C";
    const std::vector<LabeledSpan> one_token{span(t3, 0, 1, MainRole::Innocent, 1.0),
                                             span(t3, 4, 5, MainRole::Innocent, 1.0)};
    CHECK(merge_spans(one_token, t3).size() == 1);
  }
}

TEST_CASE("merge_spans is idempotent") {
  std::mt19937_64 rng(5);
  const std::u32string text(200, U'a');
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<LabeledSpan> spans;
    std::size_t pos = rng() % 3;
    while (pos + 3 < text.size()) {
      const std::size_t len = 1 + rng() % 4;
      const auto role = kCanonicalMainRoles[rng() % 2];
      const double conf = 0.3 + 0.7 * static_cast<double>(rng() % 1000) / 1000.0;
      spans.push_back(span(text, pos, pos + len, role, conf));
      pos += len + rng() % 4;
    }
    std::u32string spaced = text;
    for (std::size_t i = 0; i < spaced.size(); i += 1 + rng() % 3) spaced[i] = U' ';
    const auto once = merge_spans(spans, spaced);
    CHECK(merge_spans(once, spaced) == once);
  }
}

TEST_CASE("filter_spans") {
  const std::u32string text = U". the EU x NATO , a";
  const std::vector<LabeledSpan> spans{span(text, 0, 1, MainRole::Innocent, 1.0),
                                       span(text, 2, 5, MainRole::Innocent, 1.0),
                                       span(text, 6, 8, MainRole::Innocent, 1.0),
                                       span(text, 9, 10, MainRole::Innocent, 1.0),
                                       span(text, 11, 15, MainRole::Innocent, 1.0),
                                       span(text, 15, 18, MainRole::Innocent, 1.0)};
  const auto kept = filter_spans(spans, "en");
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].text == U"EU");
  CHECK(kept[1].text == U"NATO");
  CHECK(filter_spans(kept, "en") == kept);

  const std::u32string ru = U"и Путин";
  const std::vector<LabeledSpan> ru_spans{span(ru, 0, 1, MainRole::Antagonist, 1.0),
                                          span(ru, 2, 7, MainRole::Antagonist, 1.0)};
  CHECK(filter_spans(ru_spans, "ru").size() == 1);
  const std::vector<LabeledSpan> pt{span(U"não", 0, 3, MainRole::Antagonist, 1.0)};
  CHECK(filter_spans(pt, "pt").empty());
}

TEST_CASE("training config validation") {
  SeqTrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.epochs == 20);
  CHECK(c.peak_lr == 1e-5);
  CHECK(c.batch_size == 2);
  CHECK(c.non_o_loss_weight == 2.0);
  CHECK(c.window == 1024);
  CHECK(c.overlap == 256);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = SeqTrainConfig{};
  c.overlap = 1024;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(SeqTrainConfig::from_json(SeqTrainConfig{}.to_json()).to_json() == SeqTrainConfig{}.to_json());
}

TEST_CASE("zero epochs returns the initialized model") {
  const Dataset data = synthetic_dataset(2);
  SeqTrainConfig c;
  c.epochs = 0;
  auto result = train_sequence_labeler(data, {}, toy_encoder(), c);
  CHECK(result.report.epochs.empty());
  CHECK(result.report.best_epoch == 0);
  const SequenceLabeler fresh(toy_encoder(), kNumTags, c.seed);
  CHECK(result.model.head().weight == fresh.head().weight);
  // Non-O biases start at +0.2.
  CHECK(fresh.head().bias(0, 0) == 0.0);
  for (std::size_t j = 1; j < kNumTags; ++j) CHECK(fresh.head().bias(0, j) == doctest::Approx(0.2));
}

TEST_CASE("empty document labels nothing") {
  const SequenceLabeler model(toy_encoder(), kNumTags, 1);
  CHECK(label_article(make_document("EN_UA_1.txt", U""), model).empty());
}

TEST_CASE("training overfits a small synthetic corpus and checkpoints round trip") {
  const Dataset data = synthetic_dataset(8, 3);
  auto result = train_sequence_labeler(data, {}, toy_encoder(), toy_labeler_config());
  CHECK(result.report.epochs.size() == 30);
  CHECK(result.report.selection_split == "train");
  CHECK(result.report.epochs.back().train_loss < result.report.epochs.front().train_loss);

  std::vector<DocumentSpans> docs;
  for (const auto& entry : data) {
    const auto spans = label_article(entry.document, result.model);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      CHECK(spans[i].end - spans[i].start >= 2);
      CHECK(spans[i].text == entry.document.text.substr(spans[i].start, spans[i].end - spans[i].start));
      CHECK(spans[i].confidence >= 0.0);
      CHECK(spans[i].confidence <= 1.0);
      if (i > 0) CHECK(spans[i - 1].end <= spans[i].start);
    }
    docs.push_back({entry.document.id, spans, entry.annotations});
  }
  CHECK(exact_match_summary(docs).accuracy.value() >= 0.9);

  const fs::path dir = fs::temp_directory_path() / "framing_seq_ckpt_test";
  fs::remove_all(dir);
  result.model.save(dir);
  const SequenceLabeler loaded = SequenceLabeler::load(dir);
  CHECK(loaded.selection["epoch"] == result.report.best_epoch);
  for (const auto& entry : data) {
    CHECK(label_article(entry.document, loaded) == label_article(entry.document, result.model));
  }
  fs::remove_all(dir);
}

TEST_CASE("non-finite loss aborts training") {
  Dataset data = synthetic_dataset(1);
  SeqTrainConfig c = toy_labeler_config();
  c.epochs = 1;
  c.peak_lr = 1e300;
  c.warmup_fraction = 0.0;
  c.batch_size = 1;
  // A second document forces a second step after the blow-up.
  data.push_back(synthetic_dataset(1, 9).front());
  CHECK_THROWS_AS(train_sequence_labeler(data, {}, toy_encoder(), c), std::runtime_error);
}
