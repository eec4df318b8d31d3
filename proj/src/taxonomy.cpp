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

#include "framing/taxonomy.hpp"

#include "json.hpp"

#include "framing/text.hpp"

namespace framing {
namespace {

constexpr std::array<std::string_view, 4> kMainNames = {"Protagonist", "Antagonist", "Innocent",
                                                        "Unknown"};

constexpr std::array<std::string_view, kNumFineRoles> kFineNames = {
    "Guardian",   "Martyr",    "Peacemaker", "Rebel",       "Underdog",          "Virtuous",
    "Instigator", "Conspirator", "Tyrant",   "Foreign Adversary", "Traitor",     "Spy",
    "Saboteur",   "Corrupt",   "Incompetent", "Terrorist",  "Deceiver",          "Bigot",
    "Forgotten",  "Exploited", "Victim",     "Scapegoat",
};

// Parent of each fine role, indexed by global position.
constexpr std::array<MainRole, kNumFineRoles> kParents = [] {
  std::array<MainRole, kNumFineRoles> parents{};
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    parents[i] = i < 6 ? MainRole::Protagonist : i < 18 ? MainRole::Antagonist : MainRole::Innocent;
  }
  return parents;
}();

constexpr std::array<FineRole, kNumFineRoles> kAllRoles = [] {
  std::array<FineRole, kNumFineRoles> roles{};
  for (std::size_t i = 0; i < kNumFineRoles; ++i) roles[i] = static_cast<FineRole>(i);
  return roles;
}();

}  // namespace

std::string_view main_role_name(MainRole role) { return kMainNames[static_cast<std::size_t>(role)]; }

std::optional<MainRole> try_parse_main_role(std::string_view name) {
  name = trim_ascii(name);
  for (std::size_t i = 0; i < kMainNames.size(); ++i) {
    if (kMainNames[i] == name) return static_cast<MainRole>(i);
  }
  return std::nullopt;
}

MainRole parse_main_role(std::string_view name) {
  if (auto role = try_parse_main_role(name)) return *role;
  throw ValidationError("unknown main role: " + std::string(name));
}

std::string_view fine_role_name(FineRole role) { return kFineNames[index_of(role)]; }

std::optional<FineRole> try_parse_fine_role(std::string_view name) {
  name = trim_ascii(name);
  for (std::size_t i = 0; i < kFineNames.size(); ++i) {
    if (kFineNames[i] == name) return static_cast<FineRole>(i);
  }
  return std::nullopt;
}

FineRole parse_fine_role(std::string_view name) {
  if (auto role = try_parse_fine_role(name)) return *role;
  throw ValidationError("unknown fine role: " + std::string(name));
}

FineRole fine_role_at(std::size_t index) {
  if (index >= kNumFineRoles) throw std::out_of_range("fine role index out of range");
  return static_cast<FineRole>(index);
}

const std::array<FineRole, kNumFineRoles>& all_fine_roles() { return kAllRoles; }

std::vector<FineRole> fine_roles_of(MainRole main) {
  std::vector<FineRole> children;
  for (std::size_t i = 0; i < kNumFineRoles; ++i) {
    if (kParents[i] == main) children.push_back(static_cast<FineRole>(i));
  }
  return children;
}

RoleMask mask_vector(MainRole main) {
  RoleMask mask{};
  for (std::size_t i = 0; i < kNumFineRoles; ++i) mask[i] = kParents[i] == main ? 1.0 : 0.0;
  return mask;
}

MainRole main_of(FineRole fine) { return kParents[index_of(fine)]; }

MainRole main_of(std::string_view fine_name) { return main_of(parse_fine_role(fine_name)); }

RoleAssignment validate_assignment(MainRole main, const FineRoleSet& fines) {
  if (fines.empty()) {
    throw ValidationError("empty fine-role set for " + std::string(main_role_name(main)));
  }
  std::string violations;
  for (FineRole fine : fines) {
    if (main_of(fine) != main) {
      if (!violations.empty()) violations += ", ";
      violations += std::string(fine_role_name(fine)) + " belongs to " +
                    std::string(main_role_name(main_of(fine)));
    }
  }
  if (!violations.empty()) {
    throw ValidationError("fine roles outside " + std::string(main_role_name(main)) + ": " +
                          violations);
  }
  return {main, fines};
}

FineRoleSet parse_fine_role_list(std::string_view list) {
  FineRoleSet roles;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view item = trim_ascii(list.substr(pos, comma - pos));
    if (!item.empty()) roles.insert(parse_fine_role(item));
    pos = comma + 1;
  }
  return roles;
}

std::string format_fine_role_list(const FineRoleSet& roles) {
  std::string out;
  for (FineRole role : roles) {
    if (!out.empty()) out += ',';
    out += fine_role_name(role);
  }
  return out;
}

std::string taxonomy_json() {
  nlohmann::ordered_json doc;
  for (MainRole main : kCanonicalMainRoles) {
    auto& children = doc[std::string(main_role_name(main))] = nlohmann::ordered_json::array();
    for (FineRole fine : fine_roles_of(main)) children.push_back(fine_role_name(fine));
  }
  auto& order = doc["order"] = nlohmann::ordered_json::array();
  for (FineRole fine : all_fine_roles()) order.push_back(fine_role_name(fine));
  return doc.dump(2);
}

}  // namespace framing
