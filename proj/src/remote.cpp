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

#include "gatrec/remote.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gatrec/errors.hpp"

namespace gatrec {

namespace {

using nlohmann::json;

httplib::Client make_client(const HttpConfig& config) {
  httplib::Client cli(config.base_url);
  cli.set_connection_timeout(config.timeout_sec, 0);
  cli.set_read_timeout(config.timeout_sec, 0);
  cli.set_follow_location(true);
  return cli;
}

// Runs `attempt` up to retries+1 times with linear backoff. `attempt`
// returns nullopt to request a retry (transport error / 5xx).
template <typename F>
auto with_retries(const HttpConfig& config, const char* what, F&& attempt) {
  std::string last_error = "no attempt made";
  for (int trial = 0; trial <= config.retries; ++trial) {
    if (trial > 0 && config.backoff_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.backoff_ms * trial));
    }
    auto result = attempt(last_error);
    if (result) return *std::move(result);
  }
  throw RemoteError(std::string(what) + " failed after " +
                    std::to_string(config.retries + 1) + " attempts: " +
                    last_error);
}

std::string json_escape_free(const std::string& s) {
  // json(s).dump() returns a quoted string; strip the quotes.
  const std::string dumped = json(s).dump();
  return dumped.substr(1, dumped.size() - 2);
}

}  // namespace

HttpCatalogClient::HttpCatalogClient(HttpConfig config, std::string path_prefix)
    : config_(std::move(config)), path_prefix_(std::move(path_prefix)) {}

std::optional<ItemMeta> HttpCatalogClient::fetch(Id item_id) {
  std::string path = path_prefix_ + "/" + std::to_string(item_id);
  if (!config_.api_key.empty()) path += "?api_key=" + config_.api_key;

  struct Outcome {
    std::optional<ItemMeta> meta;
  };
  Outcome outcome = with_retries(
      config_, "catalog fetch",
      [&](std::string& last_error) -> std::optional<Outcome> {
        httplib::Client cli = make_client(config_);
        httplib::Result res = cli.Get(path);
        if (!res) {
          last_error = httplib::to_string(res.error());
          return std::nullopt;  // retry
        }
        if (res->status == 404) return Outcome{std::nullopt};
        if (res->status >= 500) {
          last_error = "HTTP " + std::to_string(res->status);
          return std::nullopt;  // retry
        }
        if (res->status != 200) {
          throw RemoteError("catalog fetch: HTTP " +
                            std::to_string(res->status));
        }
        json body = json::parse(res->body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
          throw RemoteError("catalog fetch: malformed JSON body");
        }
        ItemMeta meta;
        meta.item_id = item_id;
        meta.title = body.value("title", "");
        if (meta.title.empty()) {
          throw RemoteError("catalog fetch: response lacks title");
        }
        if (body.contains("genres") && body["genres"].is_array()) {
          for (const auto& g : body["genres"]) {
            if (g.is_object() && g.contains("name")) {
              meta.genres.push_back(g["name"].get<std::string>());
            } else if (g.is_string()) {
              meta.genres.push_back(g.get<std::string>());
            }
          }
        }
        meta.overview = body.value("overview", "");
        return Outcome{std::move(meta)};
      });
  return outcome.meta;
}

RemoteProfileGenerator::RemoteProfileGenerator(HttpConfig config,
                                               std::string model,
                                               std::string prompt_template)
    : config_(std::move(config)),
      model_(std::move(model)),
      prompt_template_(std::move(prompt_template)) {}

std::string RemoteProfileGenerator::build_prompt(const ProfileSeed& seed) const {
  auto describe = [](const std::vector<ItemMeta>& side) {
    if (side.empty()) return std::string("(none)");
    std::string out;
    for (const ItemMeta& meta : side) {
      out += "- " + meta.title;
      if (!meta.genres.empty()) {
        out += " [";
        for (std::size_t g = 0; g < meta.genres.size(); ++g) {
          if (g > 0) out += ", ";
          out += meta.genres[g];
        }
        out += "]";
      }
      if (!meta.overview.empty()) out += ": " + meta.overview;
      out += "\n";
    }
    return out;
  };
  std::string prompt = prompt_template_;
  const auto sub = [&prompt](const std::string& slot, const std::string& text) {
    const std::size_t pos = prompt.find(slot);
    if (pos != std::string::npos) prompt.replace(pos, slot.size(), text);
  };
  sub("{loved}", describe(seed.loved));
  sub("{disliked}", describe(seed.disliked));
  return prompt;
}

std::string RemoteProfileGenerator::generate(const ProfileSeed& seed) {
  const std::string prompt = build_prompt(seed);
  json payload = {
      {"model", model_},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
  };
  const std::string body = payload.dump();

  return with_retries(
      config_, "profile generation",
      [&](std::string& last_error) -> std::optional<std::string> {
        httplib::Client cli = make_client(config_);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
          headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        httplib::Result res =
            cli.Post("/v1/chat/completions", headers, body, "application/json");
        if (!res) {
          last_error = httplib::to_string(res.error());
          return std::nullopt;
        }
        if (res->status >= 500) {
          last_error = "HTTP " + std::to_string(res->status);
          return std::nullopt;
        }
        if (res->status != 200) {
          throw RemoteError("profile generation: HTTP " +
                            std::to_string(res->status));
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") ||
            reply["choices"].empty()) {
          throw RemoteError("profile generation: malformed response");
        }
        std::string text =
            reply["choices"][0].value("message", json::object())
                .value("content", "");
        if (text.empty()) {
          throw RemoteError("profile generation: empty completion");
        }
        return text;
      });
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(HttpConfig config,
                                                 std::string model,
                                                 std::size_t dim)
    : config_(std::move(config)), model_(std::move(model)), dim_(dim) {}

std::vector<double> RemoteEmbeddingProvider::embed(const std::string& text) {
  const std::string body = "{\"model\":\"" + json_escape_free(model_) +
                           "\",\"input\":[\"" + json_escape_free(text) +
                           "\"]}";
  return with_retries(
      config_, "embedding",
      [&](std::string& last_error) -> std::optional<std::vector<double>> {
        httplib::Client cli = make_client(config_);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
          headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        httplib::Result res =
            cli.Post("/v1/embeddings", headers, body, "application/json");
        if (!res) {
          last_error = httplib::to_string(res.error());
          return std::nullopt;
        }
        if (res->status >= 500) {
          last_error = "HTTP " + std::to_string(res->status);
          return std::nullopt;
        }
        if (res->status != 200) {
          throw RemoteError("embedding: HTTP " + std::to_string(res->status));
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) {
          throw RemoteError("embedding: malformed JSON");
        }
        json vec;
        if (reply.is_object() && reply.contains("data") &&
            reply["data"].is_array() && !reply["data"].empty()) {
          vec = reply["data"][0].value("embedding", json::array());
        } else if (reply.is_array() && !reply.empty() &&
                   reply[0].is_array()) {
          vec = reply[0];
        } else if (reply.is_array()) {
          vec = reply;
        }
        if (!vec.is_array() || vec.size() != dim_) {
          throw RemoteError("embedding: expected " + std::to_string(dim_) +
                            " floats, got " + std::to_string(vec.size()));
        }
        std::vector<double> out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
          out[i] = vec[i].get<double>();
        }
        return out;
      });
}

}  // namespace gatrec
