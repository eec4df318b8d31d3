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

// Deterministic synthetic corpora for the overfit harnesses and service
// fixtures. Entities keep one role assignment across the whole corpus and
// appear in role-typical sentence frames.

#pragma once

#include <string>
#include <vector>

#include "framing/corpus.hpp"
#include "framing/random.hpp"
#include "framing/taxonomy.hpp"

namespace framing::testing {

struct SyntheticEntity {
  std::u32string name;
  MainRole main;
  FineRoleSet fine;
};

inline const std::vector<SyntheticEntity>& synthetic_entities() {
  using enum FineRole;
  static const std::vector<SyntheticEntity> entities = {
      {U"Volodymyr Zelensky", MainRole::Protagonist, {Guardian}},
      {U"Red Cross", MainRole::Protagonist, {Virtuous}},
      {U"Maria Costa", MainRole::Protagonist, {Peacemaker}},
      {U"Ukrainian Army", MainRole::Protagonist, {Guardian, Underdog}},
      {U"Vladimir Putin", MainRole::Antagonist, {Tyrant}},
      {U"Wagner Group", MainRole::Antagonist, {Terrorist}},
      {U"Kremlin", MainRole::Antagonist, {Deceiver, Conspirator}},
      {U"Gazprom", MainRole::Antagonist, {Corrupt}},
      {U"Mariupol residents", MainRole::Innocent, {Victim}},
      {U"Kharkiv families", MainRole::Innocent, {Victim, Forgotten}},
      {U"Migrant workers", MainRole::Innocent, {Exploited}},
      {U"Arctic villages", MainRole::Innocent, {Forgotten}},
  };
  return entities;
}

inline const std::vector<std::u32string>& frames_for(MainRole role) {
  static const std::vector<std::u32string> protagonist = {
      U"{E} protected civilians near the front.", U"Officials praised {E} for brave work.",
      U"{E} helped families reach safety."};
  static const std::vector<std::u32string> antagonist = {
      U"{E} ordered new strikes on the city.", U"Critics accused {E} of spreading lies.",
      U"{E} threatened neighbouring states again."};
  static const std::vector<std::u32string> innocent = {
      U"{E} lost their homes in the shelling.", U"Aid groups said {E} were left without power.",
      U"{E} waited for help through the winter."};
  switch (role) {
    case MainRole::Protagonist: return protagonist;
    case MainRole::Antagonist: return antagonist;
    default: return innocent;
  }
}

inline const std::vector<std::u32string>& filler_sentences() {
  static const std::vector<std::u32string> fillers = {
      U"The weather stayed cold for most of the week.", U"Markets opened slightly higher on Monday.",
      U"Analysts expect more talks next month.", U"The report was published in the morning.",
      U"Prices for bread rose again this spring."};
  return fillers;
}

// `n_articles` articles of four entities with one or two mentions each plus
// two filler sentences. Every mention is annotated.
inline Dataset synthetic_dataset(std::size_t n_articles, std::uint64_t seed = 42,
                                 const std::string& prefix = "EN_UA_SYN") {
  Rng rng(seed);
  const auto& entities = synthetic_entities();
  Dataset data;
  for (std::size_t a = 0; a < n_articles; ++a) {
    struct Sentence {
      std::u32string text;
      const SyntheticEntity* entity = nullptr;
    };
    std::vector<Sentence> sentences;
    std::vector<std::size_t> picks(entities.size());
    for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
    shuffle(picks, rng);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& e = entities[picks[k]];
      const std::size_t mentions = 1 + uniform_index(rng, 2);
      for (std::size_t m = 0; m < mentions; ++m) {
        const auto& frames = frames_for(e.main);
        sentences.push_back({frames[uniform_index(rng, frames.size())], &e});
      }
    }
    for (std::size_t k = 0; k < 2; ++k) {
      sentences.push_back({filler_sentences()[uniform_index(rng, filler_sentences().size())], nullptr});
    }
    shuffle(sentences, rng);

    std::string id = prefix + "_" + std::to_string(1000 + a) + ".txt";
    std::u32string text;
    std::vector<GoldAnnotation> annotations;
    for (const auto& s : sentences) {
      if (!text.empty()) text += U' ';
      const auto slot = s.text.find(U"{E}");
      if (s.entity == nullptr || slot == std::u32string::npos) {
        text += s.text;
        continue;
      }
      text += s.text.substr(0, slot);
      const std::size_t start = text.size();
      text += s.entity->name;
      annotations.push_back({id, s.entity->name, start, text.size(), s.entity->main, s.entity->fine});
      text += s.text.substr(slot + 3);
    }
    data.push_back({make_document(id, text), std::move(annotations)});
  }
  return data;
}

inline std::u32string cue_word(FineRole role) {
  static const std::u32string cues[kNumFineRoles] = {
      U"shielded", U"sacrificed", U"mediated", U"defied", U"outnumbered", U"selfless",
      U"provoked", U"plotted", U"oppressed", U"invaded", U"betrayed", U"spied",
      U"sabotaged", U"bribed", U"bungled", U"bombed", U"lied", U"slurred",
      U"ignored", U"underpaid", U"wounded", U"blamed"};
  return cues[index_of(role)];
}

// `n` single-mention documents whose right context names one cue word per
// gold fine role; about one in seven instances carries two roles.
inline Dataset synthetic_role_dataset(std::size_t n, std::uint64_t seed = 42) {
  static const std::vector<std::u32string> names = {
      U"Anna Petrova", U"Global Aid", U"Northern Front", U"City Council", U"Orion Media",
      U"Danube Union", U"Harbor Workers", U"Elena Ruiz"};
  Rng rng(seed);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    const MainRole main = kCanonicalMainRoles[uniform_index(rng, 3)];
    auto children = fine_roles_of(main);
    shuffle(children, rng);
    const std::size_t k = uniform_index(rng, 7) == 0 ? 2 : 1;
    FineRoleSet fine(children.begin(), children.begin() + static_cast<std::ptrdiff_t>(k));

    const auto& filler = filler_sentences()[uniform_index(rng, filler_sentences().size())];
    const auto& name = names[uniform_index(rng, names.size())];
    std::u32string text = filler + U" Witnesses said that ";
    const std::size_t start = text.size();
    text += name;
    const std::size_t end = text.size();
    text += U" had";
    bool first = true;
    for (FineRole r : fine) {
      text += first ? U" " : U" and ";
      text += cue_word(r);
      first = false;
    }
    text += U" people last year.";

    std::string id = "EN_UA_ROLE_" + std::to_string(1000 + i) + ".txt";
    data.push_back({make_document(id, text), {{id, name, start, end, main, fine}}});
  }
  return data;
}

}  // namespace framing::testing
