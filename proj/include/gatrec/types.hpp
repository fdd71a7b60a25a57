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

#ifndef GATREC_TYPES_HPP_
#define GATREC_TYPES_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gatrec {

using Id = std::uint32_t;

/// One explicit (user, item, rating, timestamp) event.
struct Interaction {
  Id user_id = 0;
  Id item_id = 0;
  int rating = 0;  // 1..5
  std::int64_t timestamp = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Textual side information for one item.
struct ItemMeta {
  Id item_id = 0;
  std::string title;
  std::vector<std::string> genres;
  std::string overview;

  friend bool operator==(const ItemMeta&, const ItemMeta&) = default;
};

/// Interactions plus item metadata, with deduplicated sorted id lists.
///
/// Duplicate (user, item) pairs are resolved keeping the last occurrence in
/// file order. Construction validates every interaction and guarantees that
/// each rated item has an entry in item_ids.
class Dataset {
 public:
  static Dataset build(std::vector<Interaction> interactions,
                       std::map<Id, ItemMeta> items);

  const std::vector<Interaction>& interactions() const { return interactions_; }
  const std::map<Id, ItemMeta>& items() const { return items_; }
  const std::vector<Id>& user_ids() const { return user_ids_; }
  const std::vector<Id>& item_ids() const { return item_ids_; }

  std::size_t num_users() const { return user_ids_.size(); }
  std::size_t num_items() const { return item_ids_.size(); }

 private:
  std::vector<Interaction> interactions_;
  std::map<Id, ItemMeta> items_;
  std::vector<Id> user_ids_;
  std::vector<Id> item_ids_;
};

}  // namespace gatrec

#endif  // GATREC_TYPES_HPP_
