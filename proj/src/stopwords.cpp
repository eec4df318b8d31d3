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

#include "framing/stopwords.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>

#include "framing/text.hpp"

namespace framing {
namespace {

using WordSet = std::unordered_set<std::u32string>;

WordSet make_set(std::initializer_list<const char32_t*> words) {
  WordSet set;
  for (const char32_t* w : words) set.emplace(w);
  return set;
}

const std::unordered_map<std::string_view, WordSet>& lists() {
  static const std::unordered_map<std::string_view, WordSet> all = {
      {"en", make_set({U"a", U"an", U"the", U"and", U"or", U"but", U"if", U"of", U"to", U"in",
                       U"on", U"at", U"by", U"for", U"with", U"from", U"as", U"is", U"are",
                       U"was", U"were", U"be", U"been", U"it", U"its", U"this", U"that",
                       U"these", U"those", U"he", U"she", U"they", U"them", U"his", U"her",
                       U"their", U"we", U"our", U"you", U"i", U"me", U"my", U"not", U"no",
                       U"so", U"than", U"then", U"there", U"which", U"who", U"whom", U"what",
                       U"has", U"have", U"had"})},
      {"ru", make_set({U"и", U"в", U"во", U"не", U"что", U"он", U"на", U"я", U"с", U"со",
                       U"как", U"а", U"то", U"все", U"она", U"так", U"его", U"но", U"да",
                       U"ты", U"к", U"у", U"же", U"вы", U"за", U"бы", U"по", U"только", U"ее",
                       U"мне", U"было", U"вот", U"от", U"меня", U"еще", U"нет", U"о", U"из",
                       U"ему", U"теперь", U"когда", U"даже", U"ну", U"ли", U"если", U"уже",
                       U"или", U"ни", U"быть", U"был", U"него", U"до", U"они", U"это", U"их"})},
      {"bg", make_set({U"и", U"в", U"във", U"на", U"не", U"че", U"за", U"от", U"с", U"със",
                       U"да", U"се", U"по", U"до", U"при", U"като", U"но", U"или", U"а", U"е",
                       U"са", U"бе", U"бил", U"била", U"това", U"тази", U"този", U"тези", U"той",
                       U"тя", U"те", U"ние", U"вие", U"аз", U"ти", U"му", U"ѝ", U"им", U"го",
                       U"я", U"ги", U"ще", U"би", U"има", U"няма", U"който", U"която", U"което",
                       U"които", U"след", U"преди", U"към", U"между", U"също", U"още"})},
      {"pt", make_set({U"a", U"o", U"as", U"os", U"um", U"uma", U"uns", U"umas", U"de", U"do",
                       U"da", U"dos", U"das", U"em", U"no", U"na", U"nos", U"nas", U"por",
                       U"para", U"com", U"sem", U"e", U"ou", U"mas", U"que", U"se", U"não",
                       U"é", U"são", U"foi", U"ser", U"ele", U"ela", U"eles", U"elas", U"seu",
                       U"sua", U"seus", U"suas", U"este", U"esta", U"isso", U"isto", U"aquele",
                       U"como", U"mais", U"muito", U"já", U"ao", U"aos", U"pelo", U"pela"})},
      {"hi", make_set({U"का", U"के", U"की", U"है", U"हैं", U"था", U"थे", U"थी", U"में",
                       U"से", U"को", U"पर", U"और", U"या", U"लेकिन", U"कि", U"जो", U"यह",
                       U"वह", U"ये", U"वे", U"इस", U"उस", U"इन", U"उन", U"एक", U"भी", U"तो",
                       U"ही", U"नहीं", U"ने", U"हो", U"होता", U"होती", U"गया", U"गई", U"कर",
                       U"किया", U"करने", U"लिए", U"साथ", U"तक", U"अपने", U"अपनी", U"उनके",
                       U"उनकी", U"इसके", U"जब", U"तब", U"क्या", U"कुछ"})},
  };
  return all;
}

}  // namespace

bool is_stop_word(std::u32string_view word, std::string_view language) {
  const auto& all = lists();
  auto it = all.find(language);
  if (it == all.end()) it = all.find("en");
  return it->second.contains(to_lower(word));
}

}  // namespace framing
