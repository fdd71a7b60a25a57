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

#include "gatrec/embedder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "gatrec/binio.hpp"
#include "gatrec/dataset.hpp"
#include "gatrec/errors.hpp"

namespace gatrec {

using binio::read_f32;
using binio::read_u32;
using binio::read_u64;
using binio::write_f32;
using binio::write_u32;
using binio::write_u64;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
// Second hash stream for the sign bit; same FNV-1a walk from a different
// fixed basis (kFnvOffset xor a splitmix64 constant).
constexpr std::uint64_t kSignOffset = kFnvOffset ^ 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a(std::string_view token, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (const char c : token) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

bool is_token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

constexpr char kCacheMagic[4] = {'E', 'M', 'B', 'C'};

std::vector<float> quantize(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

}  // namespace

std::vector<double> hash_embed(std::string_view text, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const std::size_t bucket = fnv1a(token, kFnvOffset) % dim;
    const double sign = (fnv1a(token, kSignOffset) & 1u) ? 1.0 : -1.0;
    v[bucket] += sign;
    token.clear();
  };
  for (const char c : text) {
    if (is_token_char(static_cast<unsigned char>(c))) {
      token += static_cast<char>(
          std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();

  double norm_sq = 0.0;
  for (const double x : v) norm_sq += x * x;
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
  }
  return v;
}

void EmbeddingTable::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write embedding cache " + file.string());
  out.write(kCacheMagic, 4);
  write_u32(out, dim);
  write_u64(out, user_vectors.size() + item_vectors.size());
  auto write_side = [&](const std::map<Id, std::vector<float>>& side,
                        std::uint8_t kind) {
    for (const auto& [id, vec] : side) {
      out.put(static_cast<char>(kind));
      write_u64(out, id);
      for (const float x : vec) write_f32(out, x);
    }
  };
  write_side(user_vectors, 0);
  write_side(item_vectors, 1);
  if (!out) throw Error("short write to embedding cache " + file.string());
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read embedding cache " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0) {
    throw ParseError("bad embedding cache magic", 0);
  }
  EmbeddingTable table;
  table.dim = read_u32(in);
  const std::uint64_t count = read_u64(in);
  for (std::uint64_t r = 0; r < count; ++r) {
    const int kind = in.get();
    const std::uint64_t id = read_u64(in);
    std::vector<float> vec(table.dim);
    for (std::uint32_t i = 0; i < table.dim; ++i) vec[i] = read_f32(in);
    if (!in) throw ParseError("truncated embedding cache", r + 1);
    if (kind == 0) {
      table.user_vectors[static_cast<Id>(id)] = std::move(vec);
    } else if (kind == 1) {
      table.item_vectors[static_cast<Id>(id)] = std::move(vec);
    } else {
      throw ParseError("bad record kind in embedding cache", r + 1);
    }
  }
  return table;
}

EmbeddingTable build_embedding_table(const Dataset& dataset,
                                     const std::map<Id, UserProfile>& profiles,
                                     EmbeddingProvider& provider,
                                     const std::filesystem::path& cache_file) {
  const std::uint32_t dim = static_cast<std::uint32_t>(provider.dim());

  if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
    EmbeddingTable cached = EmbeddingTable::load(cache_file);
    bool complete = cached.dim == dim;
    if (complete) {
      for (const Id u : dataset.user_ids()) {
        if (!cached.user_vectors.count(u)) { complete = false; break; }
      }
    }
    if (complete) {
      for (const Id i : dataset.item_ids()) {
        if (!cached.item_vectors.count(i)) { complete = false; break; }
      }
    }
    if (complete) return cached;
  }

  std::string missing;
  auto note_missing = [&](const char* kind, Id id) {
    if (!missing.empty()) missing += ", ";
    missing += kind;
    missing += std::to_string(id);
  };
  for (const Id u : dataset.user_ids()) {
    if (!profiles.count(u)) note_missing("user ", u);
  }
  for (const Id i : dataset.item_ids()) {
    if (!dataset.items().count(i)) note_missing("item ", i);
  }
  if (!missing.empty()) {
    throw CompletenessError("no text source for: " + missing);
  }

  EmbeddingTable table;
  table.dim = dim;
  for (const Id u : dataset.user_ids()) {
    std::vector<double> v = provider.embed(profiles.at(u).text);
    if (v.size() != dim) {
      throw ValidationError("provider returned wrong dimension for user " +
                            std::to_string(u));
    }
    table.user_vectors[u] = quantize(v);
  }
  for (const Id i : dataset.item_ids()) {
    std::vector<double> v = provider.embed(build_item_text(dataset.items().at(i)));
    if (v.size() != dim) {
      throw ValidationError("provider returned wrong dimension for item " +
                            std::to_string(i));
    }
    table.item_vectors[i] = quantize(v);
  }
  if (!cache_file.empty()) table.save(cache_file);
  return table;
}

}  // namespace gatrec
