/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GATREC_DATASET_HPP_
#define GATREC_DATASET_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gatrec/types.hpp"

namespace gatrec {

enum class RatingsFormat { ML100K, ML1M };

/// Parses ratings text: ML100K is `user<TAB>item<TAB>rating<TAB>timestamp`,
/// ML1M is `user::item::rating::timestamp`. One Interaction per non-empty
/// line, in file order. Throws ParseError (malformed line) or
/// ValidationError (rating outside 1..5, zero id).
std::vector<Interaction> parse_interactions(std::string_view text,
                                            RatingsFormat format);

std::vector<Interaction> load_interactions_file(
    const std::filesystem::path& path, RatingsFormat format);

/// Inverse of parse_interactions for well-formed data; byte round-trips.
std::string serialize_interactions(const std::vector<Interaction>& interactions,
                                   RatingsFormat format);

/// Extracts id -> title from a MovieLens item file
/// (ML100K: `id|title|...`, ML1M: `id::title::genres`).
std::map<Id, std::string> parse_item_titles(std::string_view text,
                                            RatingsFormat format);

std::map<Id, std::string> load_item_titles_file(
    const std::filesystem::path& path, RatingsFormat format);

/// Unified item text: `<title>. Genres: <g1>, <g2>. Overview: <overview>`.
/// Pure; genre order preserved.
std::string build_item_text(const ItemMeta& meta);

}  // namespace gatrec

#endif  // GATREC_DATASET_HPP_
