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

#ifndef GATREC_REMOTE_HPP_
#define GATREC_REMOTE_HPP_

#include <cstddef>
#include <optional>
#include <string>

#include "gatrec/catalog.hpp"
#include "gatrec/embedder.hpp"
#include "gatrec/profiler.hpp"

namespace gatrec {

struct HttpConfig {
  std::string base_url;  // scheme://host[:port]
  std::string api_key;
  int timeout_sec = 15;
  int retries = 2;      // attempts = retries + 1
  int backoff_ms = 250;
};

/// TMDB-compatible movie lookup: GET {path}/{id}?api_key=KEY returning JSON
/// with `title`, `genres` ([{name}] or [string]), and `overview`. A 404 is
/// an ordinary miss (nullopt); transport failures throw RemoteError after
/// the retry budget.
class HttpCatalogClient final : public CatalogClient {
 public:
  explicit HttpCatalogClient(HttpConfig config,
                             std::string path_prefix = "/3/movie");
  std::optional<ItemMeta> fetch(Id item_id) override;

 private:
  HttpConfig config_;
  std::string path_prefix_;
};

/// Chat-completion-style profile writer. POSTs the prompt (built from the
/// repo's prompt template with {loved}/{disliked} slots) to
/// {base}/v1/chat/completions and returns choices[0].message.content.
class RemoteProfileGenerator final : public ProfileGenerator {
 public:
  RemoteProfileGenerator(HttpConfig config, std::string model,
                         std::string prompt_template);
  std::string generate(const ProfileSeed& seed) override;
  Provenance provenance() const override { return Provenance::Remote; }

  /// Visible for tests: template instantiation without the network.
  std::string build_prompt(const ProfileSeed& seed) const;

 private:
  HttpConfig config_;
  std::string model_;
  std::string prompt_template_;
};

/// Embedding endpoint client. POSTs {model, input:[text]} to
/// {base}/v1/embeddings; accepts {data:[{embedding:[...]}]}, a bare array
/// of floats, or an array of arrays. Throws RemoteError after retries (no
/// fallback here; mixing providers inside one table is unsound).
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(HttpConfig config, std::string model,
                          std::size_t dim);
  std::vector<double> embed(const std::string& text) override;
  std::size_t dim() const override { return dim_; }

 private:
  HttpConfig config_;
  std::string model_;
  std::size_t dim_;
};

}  // namespace gatrec

#endif  // GATREC_REMOTE_HPP_
