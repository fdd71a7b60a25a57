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

#include "gatrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "gatrec/errors.hpp"

namespace gatrec {

namespace {

std::vector<std::string_view> split_fields(std::string_view line,
                                           std::string_view delim) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + delim.size();
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Interaction parse_line(std::string_view line, std::string_view delim,
                       std::size_t line_no) {
  const auto fields = split_fields(line, delim);
  if (fields.size() != 4) {
    throw ParseError("expected 4 fields, got " + std::to_string(fields.size()),
                     line_no);
  }
  Interaction it;
  std::int64_t raw_rating = 0;
  if (!parse_number(fields[0], it.user_id) ||
      !parse_number(fields[1], it.item_id) ||
      !parse_number(fields[2], raw_rating) ||
      !parse_number(fields[3], it.timestamp)) {
    throw ParseError("non-numeric field", line_no);
  }
  if (raw_rating < 1 || raw_rating > 5) {
    throw ValidationError("rating " + std::to_string(raw_rating) +
                          " outside 1..5 at line " + std::to_string(line_no));
  }
  it.rating = static_cast<int>(raw_rating);
  if (it.user_id == 0 || it.item_id == 0) {
    throw ValidationError("zero id at line " + std::to_string(line_no));
  }
  return it;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<Interaction> parse_interactions(std::string_view text,
                                            RatingsFormat format) {
  const std::string_view delim = format == RatingsFormat::ML100K ? "\t" : "::";
  std::vector<Interaction> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) out.push_back(parse_line(line, delim, line_no));
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return out;
}

std::vector<Interaction> load_interactions_file(
    const std::filesystem::path& path, RatingsFormat format) {
  return parse_interactions(read_file(path), format);
}

std::string serialize_interactions(const std::vector<Interaction>& interactions,
                                   RatingsFormat format) {
  const char* delim = format == RatingsFormat::ML100K ? "\t" : "::";
  std::string out;
  for (const Interaction& it : interactions) {
    out += std::to_string(it.user_id);
    out += delim;
    out += std::to_string(it.item_id);
    out += delim;
    out += std::to_string(it.rating);
    out += delim;
    out += std::to_string(it.timestamp);
    out += '\n';
  }
  return out;
}

std::map<Id, std::string> parse_item_titles(std::string_view text,
                                            RatingsFormat format) {
  const std::string_view delim = format == RatingsFormat::ML100K ? "|" : "::";
  std::map<Id, std::string> titles;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) {
      const auto fields = split_fields(line, delim);
      Id id = 0;
      if (fields.size() < 2 || !parse_number(fields[0], id) || id == 0) {
        throw ParseError("malformed item line", line_no);
      }
      if (fields[1].empty()) throw ParseError("empty title", line_no);
      titles[id] = std::string(fields[1]);
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return titles;
}

std::map<Id, std::string> load_item_titles_file(
    const std::filesystem::path& path, RatingsFormat format) {
  return parse_item_titles(read_file(path), format);
}

std::string build_item_text(const ItemMeta& meta) {
  std::string text = meta.title;
  text += ". Genres: ";
  for (std::size_t i = 0; i < meta.genres.size(); ++i) {
    if (i > 0) text += ", ";
    text += meta.genres[i];
  }
  text += ". Overview: ";
  text += meta.overview;
  return text;
}

Dataset Dataset::build(std::vector<Interaction> interactions,
                       std::map<Id, ItemMeta> items) {
  // Keep the last occurrence of each (user, item) pair, preserving the file
  // order of the survivors.
  std::unordered_map<std::uint64_t, std::size_t> last_pos;
  last_pos.reserve(interactions.size());
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(interactions[i].user_id) << 32) |
        interactions[i].item_id;
    last_pos[key] = i;
  }
  std::vector<Interaction> deduped;
  deduped.reserve(last_pos.size());
  for (std::size_t i = 0; i < interactions.size(); ++i) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(interactions[i].user_id) << 32) |
        interactions[i].item_id;
    if (last_pos.at(key) == i) deduped.push_back(interactions[i]);
  }

  Dataset ds;
  ds.interactions_ = std::move(deduped);
  for (const Interaction& it : ds.interactions_) {
    ds.user_ids_.push_back(it.user_id);
    ds.item_ids_.push_back(it.item_id);
  }
  for (const auto& [id, meta] : items) {
    if (meta.title.empty()) {
      throw ValidationError("item " + std::to_string(id) + " has empty title");
    }
    ds.item_ids_.push_back(id);
  }
  ds.items_ = std::move(items);

  auto dedupe_sort = [](std::vector<Id>& ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  };
  dedupe_sort(ds.user_ids_);
  dedupe_sort(ds.item_ids_);
  return ds;
}

}  // namespace gatrec
