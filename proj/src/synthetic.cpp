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

#include "gatrec/synthetic.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "gatrec/rng.hpp"

namespace gatrec {

namespace {

constexpr std::array<const char*, 8> kGenres = {
    "Action",  "Comedy",  "Drama",    "Horror",
    "SciFi",   "Romance", "Thriller", "Documentary"};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string make_overview(const std::vector<std::string>& genres, Rng& rng) {
  const std::array<const char*, 4> frames = {
      "A % tale about an unlikely hero.",
      "An intense % journey through shifting loyalties.",
      "A quiet % story of second chances.",
      "A sprawling % epic across generations."};
  std::string frame = frames[rng.uniform_int(frames.size())];
  std::string fill = lower(genres[0]);
  if (genres.size() > 1) fill += " " + lower(genres[1]);
  const std::size_t pos = frame.find('%');
  frame.replace(pos, 1, fill);
  return frame;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  Rng rng(Rng::derive(spec.seed, 0x51D));
  SyntheticData data;

  std::vector<std::vector<std::size_t>> item_genres(spec.num_items);
  for (std::uint32_t i = 0; i < spec.num_items; ++i) {
    const Id id = i + 1;
    ItemMeta meta;
    meta.item_id = id;
    meta.title = "Movie " + std::to_string(id);
    const std::size_t g1 = rng.uniform_int(kGenres.size());
    item_genres[i].push_back(g1);
    meta.genres.emplace_back(kGenres[g1]);
    if (rng.bernoulli(0.4)) {
      std::size_t g2 = rng.uniform_int(kGenres.size() - 1);
      if (g2 >= g1) ++g2;
      item_genres[i].push_back(g2);
      meta.genres.emplace_back(kGenres[g2]);
    }
    meta.overview = make_overview(meta.genres, rng);
    data.items[id] = std::move(meta);
  }

  std::int64_t timestamp = 1'000'000'000;
  for (std::uint32_t u = 0; u < spec.num_users; ++u) {
    const Id user_id = u + 1;
    std::size_t pref1 = rng.uniform_int(kGenres.size());
    std::size_t pref2 = rng.uniform_int(kGenres.size() - 1);
    if (pref2 >= pref1) ++pref2;

    const bool sparse = u + spec.sparse_users >= spec.num_users;
    std::uint32_t count;
    if (sparse) {
      count = 3;
    } else {
      count = spec.min_ratings +
              static_cast<std::uint32_t>(rng.uniform_int(
                  spec.max_ratings - spec.min_ratings + 1));
    }

    std::vector<std::uint32_t> pool(spec.num_items);
    for (std::uint32_t i = 0; i < spec.num_items; ++i) pool[i] = i;
    rng.shuffle(pool);
    pool.resize(std::min<std::size_t>(count, pool.size()));
    std::sort(pool.begin(), pool.end());

    for (const std::uint32_t item : pool) {
      bool liked = false;
      for (const std::size_t g : item_genres[item]) {
        if (g == pref1 || g == pref2) liked = true;
      }
      int rating;
      if (liked) {
        rating = rng.bernoulli(0.55) ? 5 : 4;
      } else {
        const double roll = rng.uniform01();
        rating = roll < 0.35 ? 1 : (roll < 0.70 ? 2 : 3);
      }
      if (rng.bernoulli(spec.noise_rate)) {
        rating = 1 + static_cast<int>(rng.uniform_int(5));
      }
      timestamp += 60;
      data.interactions.push_back(
          Interaction{user_id, item + 1, rating, timestamp});
    }
  }
  return data;
}

Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  SyntheticData data = make_synthetic(spec);
  return Dataset::build(std::move(data.interactions), std::move(data.items));
}

}  // namespace gatrec
