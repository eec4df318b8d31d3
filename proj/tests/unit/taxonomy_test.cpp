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

#include "doctest.h"
#include "json.hpp"

#include "framing/taxonomy.hpp"

using namespace framing;

TEST_CASE("fine_roles_of lists children in global order") {
  CHECK(fine_roles_of(MainRole::Protagonist) ==
        std::vector<FineRole>{FineRole::Guardian, FineRole::Martyr, FineRole::Peacemaker,
                              FineRole::Rebel, FineRole::Underdog, FineRole::Virtuous});
  CHECK(fine_roles_of(MainRole::Innocent) ==
        std::vector<FineRole>{FineRole::Forgotten, FineRole::Exploited, FineRole::Victim,
                              FineRole::Scapegoat});
  CHECK(fine_roles_of(MainRole::Unknown).empty());
  CHECK(fine_roles_of(MainRole::Antagonist).size() == 12);
}

TEST_CASE("mask vectors partition the role space") {
  const auto pro = mask_vector(MainRole::Protagonist);
  const auto ant = mask_vector(MainRole::Antagonist);
  const auto inn = mask_vector(MainRole::Innocent);
  const auto unk = mask_vector(MainRole::Unknown);
  double ant_ones = 0;
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    CHECK(pro[i] + ant[i] + inn[i] == 1.0);
    CHECK(inn[i] * pro[i] == 0.0);
    CHECK(unk[i] == 0.0);
    ant_ones += ant[i];
  }
  CHECK(ant_ones == 12.0);
}

TEST_CASE("every fine role belongs to exactly its parent's mask") {
  for (FineRole fine : all_fine_roles()) {
    const MainRole parent = main_of(fine);
    const auto children = fine_roles_of(parent);
    CHECK(std::find(children.begin(), children.end(), fine) != children.end());
    for (MainRole main : kCanonicalMainRoles) {
      CHECK((mask_vector(main)[index_of(fine)] == 1.0) == (main == parent));
    }
  }
}

TEST_CASE("main_of by name") {
  CHECK(main_of("Victim") == MainRole::Innocent);
  CHECK(main_of("Tyrant") == MainRole::Antagonist);
  CHECK(main_of("Foreign Adversary") == MainRole::Antagonist);
  CHECK_THROWS_WITH_AS(main_of("Hero"), "unknown fine role: Hero", ValidationError);
}

TEST_CASE("validate_assignment") {
  CHECK_NOTHROW(validate_assignment(MainRole::Protagonist, {FineRole::Guardian}));
  CHECK_THROWS_WITH_AS(validate_assignment(MainRole::Protagonist, {FineRole::Victim}),
                       doctest::Contains("Victim belongs to Innocent"), ValidationError);
  CHECK_THROWS_WITH_AS(validate_assignment(MainRole::Antagonist, {}),
                       doctest::Contains("empty fine-role set"), ValidationError);
}

TEST_CASE("role list parsing and taxonomy json") {
  const auto roles = parse_fine_role_list("Guardian, Foreign Adversary");
  CHECK(roles == FineRoleSet{FineRole::Guardian, FineRole::ForeignAdversary});
  CHECK(format_fine_role_list(roles) == "Guardian,Foreign Adversary");
  CHECK(parse_fine_role_list("").empty());

  const auto doc = nlohmann::json::parse(taxonomy_json());
  CHECK(doc["Protagonist"].size() == 6);
  CHECK(doc["Antagonist"][3] == "Foreign Adversary");
  CHECK(doc["order"].size() == kNumFineRoles);
  CHECK(doc["order"][0] == "Guardian");
  CHECK(doc["order"][21] == "Scapegoat");
}
