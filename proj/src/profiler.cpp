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

#include "gatrec/profiler.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <thread>

#include "gatrec/errors.hpp"

namespace gatrec {

namespace {

std::vector<ItemMeta> pick_top5(std::vector<const Interaction*> qualifying,
                                const std::map<Id, ItemMeta>& items) {
  std::sort(qualifying.begin(), qualifying.end(),
            [](const Interaction* a, const Interaction* b) {
              if (a->timestamp != b->timestamp)
                return a->timestamp > b->timestamp;  // most recent first
              return a->item_id < b->item_id;
            });
  if (qualifying.size() > 5) qualifying.resize(5);
  std::vector<ItemMeta> out;
  out.reserve(qualifying.size());
  for (const Interaction* it : qualifying) {
    const auto meta = items.find(it->item_id);
    if (meta == items.end()) {
      throw ValidationError("no metadata for item " +
                            std::to_string(it->item_id));
    }
    out.push_back(meta->second);
  }
  return out;
}

std::string format_side(const std::vector<ItemMeta>& side) {
  if (side.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (i > 0) out += "; ";
    out += side[i].title;
    if (!side[i].genres.empty()) {
      out += " (";
      for (std::size_t g = 0; g < side[i].genres.size(); ++g) {
        if (g > 0) out += ", ";
        out += side[i].genres[g];
      }
      out += ")";
    }
  }
  return out;
}

std::string sanitize_text(std::string text) {
  for (char& c : text) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

ProfileSeed select_profile_items(std::span<const Interaction> user_interactions,
                                 const std::map<Id, ItemMeta>& items) {
  ProfileSeed seed;
  std::vector<const Interaction*> loved, disliked;
  for (const Interaction& it : user_interactions) {
    if (seed.user_id == 0) seed.user_id = it.user_id;
    if (it.user_id != seed.user_id) {
      throw ValidationError("interactions span multiple users");
    }
    if (it.rating == 5) loved.push_back(&it);
    if (it.rating <= 2) disliked.push_back(&it);
  }
  seed.loved = pick_top5(std::move(loved), items);
  seed.disliked = pick_top5(std::move(disliked), items);
  return seed;
}

std::string fallback_profile_text(const ProfileSeed& seed) {
  if (seed.loved.empty() && seed.disliked.empty()) {
    return "No strong preferences recorded.";
  }
  return "Enjoys: " + format_side(seed.loved) +
         ". Dislikes: " + format_side(seed.disliked) + ".";
}

UserProfile generate_profile(const ProfileSeed& seed,
                             ProfileGenerator& generator) {
  if (seed.loved.empty() && seed.disliked.empty()) {
    return UserProfile{seed.user_id, "No strong preferences recorded.",
                       Provenance::Fallback};
  }
  try {
    std::string text = generator.generate(seed);
    if (text.empty()) throw RemoteError("empty profile text");
    return UserProfile{seed.user_id, std::move(text), generator.provenance()};
  } catch (const std::exception&) {
    return UserProfile{seed.user_id, fallback_profile_text(seed),
                       Provenance::Fallback};
  }
}

std::map<Id, UserProfile> build_profiles(const Dataset& dataset,
                                         ProfileGenerator& generator,
                                         int max_concurrency) {
  // Group interactions per user, preserving file order within each group.
  std::map<Id, std::vector<Interaction>> by_user;
  for (const Interaction& it : dataset.interactions()) {
    by_user[it.user_id].push_back(it);
  }
  std::vector<Id> order;
  std::vector<ProfileSeed> seeds;
  order.reserve(dataset.user_ids().size());
  for (const Id user : dataset.user_ids()) {
    order.push_back(user);
    ProfileSeed seed = select_profile_items(by_user[user], dataset.items());
    seed.user_id = user;  // users whose ratings are all mid-range
    seeds.push_back(std::move(seed));
  }

  std::vector<UserProfile> results(order.size());
  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < order.size(); i += step) {
      results[i] = generate_profile(seeds[i], generator);
    }
  };
  const int threads = std::max(1, max_concurrency);
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker, static_cast<std::size_t>(t),
                        static_cast<std::size_t>(threads));
    }
    for (auto& th : pool) th.join();
  }

  std::map<Id, UserProfile> out;
  for (std::size_t i = 0; i < order.size(); ++i) out[order[i]] = results[i];
  return out;
}

void save_profiles(const std::filesystem::path& file,
                   const std::map<Id, UserProfile>& profiles) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write profiles " + file.string());
  for (const auto& [id, profile] : profiles) {
    out << id << '\t'
        << (profile.provenance == Provenance::Remote ? "remote" : "fallback")
        << '\t' << sanitize_text(profile.text) << '\n';
  }
}

std::map<Id, UserProfile> load_profiles(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read profiles " + file.string());
  std::map<Id, UserProfile> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                                   : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError("expected 3 fields", line_no);
    UserProfile p;
    const auto [ptr, ec] =
        std::from_chars(line.data(), line.data() + t1, p.user_id);
    if (ec != std::errc() || ptr != line.data() + t1 || p.user_id == 0) {
      throw ParseError("bad user id", line_no);
    }
    const std::string prov = line.substr(t1 + 1, t2 - t1 - 1);
    if (prov == "remote") {
      p.provenance = Provenance::Remote;
    } else if (prov == "fallback") {
      p.provenance = Provenance::Fallback;
    } else {
      throw ParseError("bad provenance '" + prov + "'", line_no);
    }
    p.text = line.substr(t2 + 1);
    if (p.text.empty()) throw ParseError("empty profile text", line_no);
    out[p.user_id] = std::move(p);
  }
  return out;
}

}  // namespace gatrec
