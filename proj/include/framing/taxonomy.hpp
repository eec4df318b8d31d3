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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace framing {

// Raised for malformed user-facing input (unknown role names, bad spans,
// inconsistent role assignments). The message names the offending value.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coarse narrative role. Unknown exists only for the NER-augmented training
// variant and never owns fine-grained roles.
enum class MainRole : std::uint8_t { Protagonist = 0, Antagonist = 1, Innocent = 2, Unknown = 3 };

inline constexpr std::array<MainRole, 3> kCanonicalMainRoles = {
    MainRole::Protagonist, MainRole::Antagonist, MainRole::Innocent};

// Fine-grained roles in the global serialization order: Protagonist
// children, then Antagonist, then Innocent.
enum class FineRole : std::uint8_t {
  Guardian, Martyr, Peacemaker, Rebel, Underdog, Virtuous,
  Instigator, Conspirator, Tyrant, ForeignAdversary, Traitor, Spy,
  Saboteur, Corrupt, Incompetent, Terrorist, Deceiver, Bigot,
  Forgotten, Exploited, Victim, Scapegoat,
};

inline constexpr std::size_t kNumFineRoles = 22;

using RoleMask = std::array<double, kNumFineRoles>;
using FineRoleSet = std::set<FineRole>;

std::string_view main_role_name(MainRole role);
MainRole parse_main_role(std::string_view name);
std::optional<MainRole> try_parse_main_role(std::string_view name);

std::string_view fine_role_name(FineRole role);
FineRole parse_fine_role(std::string_view name);
std::optional<FineRole> try_parse_fine_role(std::string_view name);

inline constexpr std::size_t index_of(FineRole role) { return static_cast<std::size_t>(role); }
FineRole fine_role_at(std::size_t index);

// All 22 roles in global order.
const std::array<FineRole, kNumFineRoles>& all_fine_roles();

// Children of `main` in global order; empty for Unknown.
std::vector<FineRole> fine_roles_of(MainRole main);

// 1.0 at the positions of `main`'s children, 0.0 elsewhere.
RoleMask mask_vector(MainRole main);

MainRole main_of(FineRole fine);
// Throws ValidationError("unknown fine role: <name>") for unrecognized names.
MainRole main_of(std::string_view fine_name);

struct RoleAssignment {
  MainRole main;
  FineRoleSet fines;
};

// Accepts iff `fines` is non-empty and every role is a child of `main`.
RoleAssignment validate_assignment(MainRole main, const FineRoleSet& fines);

// Parses a comma-separated fine-role list ("Guardian,Foreign Adversary").
FineRoleSet parse_fine_role_list(std::string_view list);
std::string format_fine_role_list(const FineRoleSet& roles);

// {"Protagonist": [...], "Antagonist": [...], "Innocent": [...]}, plus the
// flat global order under "order".
std::string taxonomy_json();

}  // namespace framing
