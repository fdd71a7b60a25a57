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

#include "gatrec/catalog.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "gatrec/errors.hpp"

namespace gatrec {

namespace {

std::string sanitize_field(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

FileCatalogClient::FileCatalogClient(const std::filesystem::path& file)
    : records_(MetadataCache::load_file(file)) {}

std::optional<ItemMeta> FileCatalogClient::fetch(Id item_id) {
  const auto it = records_.find(item_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::string MetadataCache::serialize_record(const ItemMeta& meta) {
  std::string line = std::to_string(meta.item_id);
  line += '\t';
  line += sanitize_field(meta.title);
  line += '\t';
  for (std::size_t i = 0; i < meta.genres.size(); ++i) {
    if (i > 0) line += '|';
    line += sanitize_field(meta.genres[i]);
  }
  line += '\t';
  line += sanitize_field(meta.overview);
  line += '\n';
  return line;
}

ItemMeta MetadataCache::parse_record(std::string_view line,
                                     std::size_t line_no) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (fields.size() < 3) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) break;
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  if (fields.size() != 3) throw ParseError("expected 4 tab fields", line_no);
  fields.push_back(line.substr(pos));  // overview may be empty

  ItemMeta meta;
  const auto id_field = fields[0];
  const auto [ptr, ec] = std::from_chars(
      id_field.data(), id_field.data() + id_field.size(), meta.item_id);
  if (ec != std::errc() || ptr != id_field.data() + id_field.size() ||
      meta.item_id == 0) {
    throw ParseError("bad item id", line_no);
  }
  meta.title = std::string(fields[1]);
  if (meta.title.empty()) throw ParseError("empty title", line_no);
  std::string_view genres = fields[2];
  while (!genres.empty()) {
    const std::size_t bar = genres.find('|');
    const std::string_view g =
        bar == std::string_view::npos ? genres : genres.substr(0, bar);
    if (!g.empty()) meta.genres.emplace_back(g);
    if (bar == std::string_view::npos) break;
    genres.remove_prefix(bar + 1);
  }
  meta.overview = std::string(fields[3]);
  return meta;
}

std::map<Id, ItemMeta> MetadataCache::load_file(
    const std::filesystem::path& file) {
  std::map<Id, ItemMeta> records;
  std::ifstream in(file, std::ios::binary);
  if (!in) return records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ItemMeta meta = parse_record(line, line_no);
    records[meta.item_id] = std::move(meta);  // last occurrence wins
  }
  return records;
}

MetadataCache::MetadataCache(std::filesystem::path file)
    : file_(std::move(file)), records_(load_file(file_)) {}

std::optional<ItemMeta> MetadataCache::get(Id item_id) const {
  std::lock_guard lock(mutex_);
  const auto it = records_.find(item_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void MetadataCache::put(const ItemMeta& meta) {
  std::lock_guard lock(mutex_);
  records_[meta.item_id] = meta;
  if (file_.empty()) return;
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to cache " + file_.string());
  out << serialize_record(meta);
}

void MetadataCache::save() const {
  std::lock_guard lock(mutex_);
  if (file_.empty()) return;
  std::ofstream out(file_, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write cache " + file_.string());
  for (const auto& [id, meta] : records_) out << serialize_record(meta);
}

std::size_t MetadataCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

ItemMeta fetch_item_metadata(Id item_id, CatalogClient& client,
                             MetadataCache& cache) {
  if (auto cached = cache.get(item_id)) return *cached;
  if (auto fetched = client.fetch(item_id)) {
    cache.put(*fetched);
    return *fetched;
  }
  throw MetadataError("item " + std::to_string(item_id) +
                      " unresolvable by cache and catalog client");
}

std::map<Id, ItemMeta> enrich_items(const std::vector<Id>& item_ids,
                                    const std::map<Id, std::string>& titles,
                                    CatalogClient& client, MetadataCache& cache,
                                    bool substitute_missing,
                                    int max_concurrency) {
  std::vector<std::optional<ItemMeta>> results(item_ids.size());
  std::vector<std::string> failures(item_ids.size());

  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < item_ids.size(); i += step) {
      const Id id = item_ids[i];
      try {
        results[i] = fetch_item_metadata(id, client, cache);
      } catch (const MetadataError&) {
        const auto title = titles.find(id);
        if (substitute_missing && title != titles.end()) {
          results[i] = ItemMeta{id, title->second, {}, ""};
        } else {
          failures[i] = std::to_string(id);
        }
      }
    }
  };

  const int threads = std::max(1, max_concurrency);
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker, static_cast<std::size_t>(t),
                        static_cast<std::size_t>(threads));
    }
    for (auto& th : pool) th.join();
  }

  std::string missing;
  for (const auto& f : failures) {
    if (f.empty()) continue;
    if (!missing.empty()) missing += ", ";
    missing += f;
  }
  if (!missing.empty()) {
    throw MetadataError("items without metadata: " + missing);
  }

  std::map<Id, ItemMeta> out;
  for (std::size_t i = 0; i < item_ids.size(); ++i) out[item_ids[i]] = *results[i];
  return out;
}

}  // namespace gatrec
