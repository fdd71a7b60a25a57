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

#ifndef GATREC_EMBEDDER_HPP_
#define GATREC_EMBEDDER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gatrec/profiler.hpp"
#include "gatrec/types.hpp"

namespace gatrec {

/// Signed feature hashing: lowercase word tokens (split on non-alphanumeric
/// bytes), bucket = fnv1a64(token) mod dim, sign from the parity of a
/// second fixed hash, accumulate +/-1 per token occurrence, then
/// L2-normalize unless the result is the zero vector. Seedless and
/// deterministic; the hash constants are documented in the README.
std::vector<double> hash_embed(std::string_view text, std::size_t dim);

/// Text-to-vector provider; one provider per run (mixing encoder geometries
/// within a table is rejected at build time by construction).
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Dimension-`dim()` vector. Remote implementations throw RemoteError
  /// after exhausting retries; there is no silent fallback here.
  virtual std::vector<double> embed(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
};

class HashingEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashingEmbeddingProvider(std::size_t dim = 384) : dim_(dim) {}
  std::vector<double> embed(const std::string& text) override {
    return hash_embed(text, dim_);
  }
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
};

/// Complete table of initial node features, stored quantized to f32 so that
/// a cold computation and a warm cache reload feed training identically.
struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::map<Id, std::vector<float>> user_vectors;
  std::map<Id, std::vector<float>> item_vectors;

  /// Binary cache: `EMBC` magic | dim u32 LE | count u64 LE, then records
  /// `kind u8 (0=user,1=item) | id u64 LE | dim x f32 LE`, users before
  /// items, ids ascending. Bit-exact across platforms.
  void save(const std::filesystem::path& file) const;
  static EmbeddingTable load(const std::filesystem::path& file);
};

/// Embeds every user profile and unified item text. When `cache_file` exists
/// with a matching dimension and covers all ids, it is loaded and the
/// provider is never called; otherwise the table is computed and persisted.
/// Throws CompletenessError listing ids that lack a profile or item text.
EmbeddingTable build_embedding_table(const Dataset& dataset,
                                     const std::map<Id, UserProfile>& profiles,
                                     EmbeddingProvider& provider,
                                     const std::filesystem::path& cache_file);

}  // namespace gatrec

#endif  // GATREC_EMBEDDER_HPP_
