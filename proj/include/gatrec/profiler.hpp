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

#ifndef GATREC_PROFILER_HPP_
#define GATREC_PROFILER_HPP_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gatrec/types.hpp"

namespace gatrec {

/// Extreme-rated items feeding one user's textual profile.
struct ProfileSeed {
  Id user_id = 0;
  std::vector<ItemMeta> loved;     // rating exactly 5, at most 5 items
  std::vector<ItemMeta> disliked;  // rating <= 2, at most 5 items
};

enum class Provenance { Remote, Fallback };

struct UserProfile {
  Id user_id = 0;
  std::string text;
  Provenance provenance = Provenance::Fallback;
};

/// Picks up to 5 loved (rating 5) and 5 disliked (rating <= 2) items. When
/// more qualify, the most recent timestamps win; ties break by ascending
/// item_id. All interactions must belong to one user.
ProfileSeed select_profile_items(std::span<const Interaction> user_interactions,
                                 const std::map<Id, ItemMeta>& items);

/// Produces profile text from a seed. Remote implementations throw on
/// failure after their retry budget; generate_profile then degrades to the
/// deterministic fallback.
class ProfileGenerator {
 public:
  virtual ~ProfileGenerator() = default;
  virtual std::string generate(const ProfileSeed& seed) = 0;
  virtual Provenance provenance() const = 0;
};

/// Template: `Enjoys: <title> (<genres>); ... Dislikes: ...` with "none" for
/// an empty side and a fixed sentence for an empty seed. Pure.
std::string fallback_profile_text(const ProfileSeed& seed);

class FallbackProfileGenerator final : public ProfileGenerator {
 public:
  std::string generate(const ProfileSeed& seed) override {
    return fallback_profile_text(seed);
  }
  Provenance provenance() const override { return Provenance::Fallback; }
};

/// Runs the generator, falling back deterministically (and recording
/// provenance) when it throws. An empty seed short-circuits to the fixed
/// no-preferences sentence without calling the generator.
UserProfile generate_profile(const ProfileSeed& seed,
                             ProfileGenerator& generator);

/// Profiles every user in the dataset. `max_concurrency` bounds parallel
/// generator calls (remote clients rate-limit this way); results are
/// deterministic per user regardless of thread count for pure generators.
std::map<Id, UserProfile> build_profiles(const Dataset& dataset,
                                         ProfileGenerator& generator,
                                         int max_concurrency = 1);

/// Cache file: `user_id<TAB>provenance<TAB>profile-text`, UTF-8, sorted.
void save_profiles(const std::filesystem::path& file,
                   const std::map<Id, UserProfile>& profiles);
std::map<Id, UserProfile> load_profiles(const std::filesystem::path& file);

}  // namespace gatrec

#endif  // GATREC_PROFILER_HPP_
