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

#ifndef GATREC_CATALOG_HPP_
#define GATREC_CATALOG_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gatrec/types.hpp"

namespace gatrec {

/// Source of item metadata. Implementations: HttpCatalogClient (remote),
/// FileCatalogClient (offline file), NullCatalogClient (always misses).
class CatalogClient {
 public:
  virtual ~CatalogClient() = default;
  /// nullopt when the item is unknown to this source.
  virtual std::optional<ItemMeta> fetch(Id item_id) = 0;
};

class NullCatalogClient final : public CatalogClient {
 public:
  std::optional<ItemMeta> fetch(Id) override { return std::nullopt; }
};

/// Serves metadata from a cache-format file without touching the network.
class FileCatalogClient final : public CatalogClient {
 public:
  explicit FileCatalogClient(const std::filesystem::path& file);
  std::optional<ItemMeta> fetch(Id item_id) override;

 private:
  std::map<Id, ItemMeta> records_;
};

/// On-disk metadata cache. One record per line:
/// `item_id<TAB>title<TAB>genre1|genre2|...<TAB>overview`, UTF-8; literal
/// tabs and newlines inside fields are replaced by single spaces on write.
/// put() persists immediately (append); save() rewrites the file in sorted
/// canonical form. Thread-safe.
class MetadataCache {
 public:
  explicit MetadataCache(std::filesystem::path file);

  std::optional<ItemMeta> get(Id item_id) const;
  void put(const ItemMeta& meta);
  void save() const;
  std::size_t size() const;

  static std::string serialize_record(const ItemMeta& meta);
  static ItemMeta parse_record(std::string_view line, std::size_t line_no);
  static std::map<Id, ItemMeta> load_file(const std::filesystem::path& file);

 private:
  std::filesystem::path file_;
  std::map<Id, ItemMeta> records_;
  mutable std::mutex mutex_;
};

/// Cache-first metadata lookup; a remote hit is persisted to the cache
/// before returning. Missing overview is normal (empty string). Throws
/// MetadataError when neither cache nor client resolves the item.
ItemMeta fetch_item_metadata(Id item_id, CatalogClient& client,
                             MetadataCache& cache);

/// Resolves metadata for every id. Items unresolvable by both cache and
/// client degrade to a title-only ItemMeta from `titles` when
/// `substitute_missing` is set (and are otherwise an error). Fetches run on
/// up to `max_concurrency` threads; cache writes are serialized.
std::map<Id, ItemMeta> enrich_items(const std::vector<Id>& item_ids,
                                    const std::map<Id, std::string>& titles,
                                    CatalogClient& client, MetadataCache& cache,
                                    bool substitute_missing,
                                    int max_concurrency = 1);

}  // namespace gatrec

#endif  // GATREC_CATALOG_HPP_
