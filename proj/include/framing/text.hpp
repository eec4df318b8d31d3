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

// Code-point level text utilities. All document offsets in this project count
// Unicode code points, so text is held as std::u32string internally and only
// converted to UTF-8 at I/O boundaries.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace framing {

// Decodes UTF-8. Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string utf8_to_u32(std::string_view utf8);
std::string u32_to_utf8(std::u32string_view text);

bool is_space(char32_t c);
bool is_punct(char32_t c);
// Neither whitespace nor punctuation.
inline bool is_word_char(char32_t c) { return !is_space(c) && !is_punct(c); }

char32_t to_lower(char32_t c);
std::u32string to_lower(std::u32string_view text);
inline bool is_upper(char32_t c) { return to_lower(c) != c; }

std::u32string_view trim(std::u32string_view text);
std::string_view trim_ascii(std::string_view text);

// Lowercase, drop punctuation, collapse whitespace runs to one space, trim.
std::u32string normalize_text(std::u32string_view text);

// Whitespace-separated pieces of `text`.
std::vector<std::u32string> split_whitespace(std::u32string_view text);

// Case-insensitive equality on code points.
bool iequals(std::u32string_view a, std::u32string_view b);

}  // namespace framing
