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

#ifndef GATREC_SYNTHETIC_HPP_
#define GATREC_SYNTHETIC_HPP_

#include <cstdint>

#include "gatrec/types.hpp"

namespace gatrec {

/// Seeded generator for the bundled fixture: items carry one or two genres
/// (reflected in their fabricated titles/overviews), each user prefers two
/// genres and rates matching items 4-5 and non-matching items 1-3, with a
/// small noise rate. The trailing `sparse_users` users rate only three
/// items each, populating the cold-start slice.
struct SyntheticSpec {
  std::uint32_t num_users = 100;
  std::uint32_t num_items = 200;
  std::uint64_t seed = 1;
  std::uint32_t min_ratings = 25;
  std::uint32_t max_ratings = 40;
  std::uint32_t sparse_users = 5;
  double noise_rate = 0.05;
};

struct SyntheticData {
  std::vector<Interaction> interactions;
  std::map<Id, ItemMeta> items;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

Dataset make_synthetic_dataset(const SyntheticSpec& spec = {});

}  // namespace gatrec

#endif  // GATREC_SYNTHETIC_HPP_
