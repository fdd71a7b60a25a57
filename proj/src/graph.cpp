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

#include "gatrec/graph.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "gatrec/errors.hpp"

namespace gatrec {

NodeIndex NodeIndex::build(std::vector<Id> users, std::vector<Id> items) {
  auto canonicalize = [](std::vector<Id>& ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  };
  canonicalize(users);
  canonicalize(items);

  NodeIndex index;
  index.user_ids = std::move(users);
  index.item_ids = std::move(items);
  index.user_to_node.reserve(index.user_ids.size());
  index.item_to_node.reserve(index.item_ids.size());
  for (std::uint32_t i = 0; i < index.user_ids.size(); ++i) {
    index.user_to_node.emplace(index.user_ids[i], i);
  }
  const std::uint32_t offset = index.num_users();
  for (std::uint32_t i = 0; i < index.item_ids.size(); ++i) {
    index.item_to_node.emplace(index.item_ids[i], offset + i);
  }
  return index;
}

BipartiteGraph BipartiteGraph::build(
    const std::vector<Interaction>& interactions, NodeIndex index,
    GraphOptions options) {
  BipartiteGraph g;
  g.index_ = std::move(index);
  const std::uint32_t n = g.index_.num_nodes();

  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const Interaction& it : interactions) {
    if (it.rating == 3) continue;
    const auto u = g.index_.user_to_node.find(it.user_id);
    const auto i = g.index_.item_to_node.find(it.item_id);
    if (u == g.index_.user_to_node.end() || i == g.index_.item_to_node.end()) {
      throw ValidationError("interaction references id outside node index");
    }
    if (!seen.emplace(u->second, i->second).second) {
      throw ValidationError("duplicate (user,item) pair reached graph build");
    }
    const EdgeSign sign =
        it.rating >= 4 ? EdgeSign::Positive : EdgeSign::Negative;
    g.edges_.push_back(SignedEdge{u->second, i->second, sign, it.rating});
  }
  if (g.edges_.empty()) {
    throw EmptyGraphError("no edges remain after rating-3 filtering");
  }

  // Both directions materialized: each edge contributes one CSR entry at the
  // user node and one at the item node.
  std::vector<std::uint32_t> counts(n, 0);
  for (const SignedEdge& e : g.edges_) {
    if (options.positive_edges_only && e.sign == EdgeSign::Negative) continue;
    ++counts[e.user_node];
    ++counts[e.item_node];
  }
  g.adj_offsets_.assign(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    g.adj_offsets_[v + 1] = g.adj_offsets_[v] + counts[v];
  }
  g.adj_.resize(g.adj_offsets_[n]);
  g.adj_signs_.resize(g.adj_offsets_[n]);
  std::vector<std::uint32_t> cursor(g.adj_offsets_.begin(),
                                    g.adj_offsets_.end() - 1);
  for (const SignedEdge& e : g.edges_) {
    if (options.positive_edges_only && e.sign == EdgeSign::Negative) continue;
    g.adj_[cursor[e.user_node]] = e.item_node;
    g.adj_signs_[cursor[e.user_node]++] = e.sign;
    g.adj_[cursor[e.item_node]] = e.user_node;
    g.adj_signs_[cursor[e.item_node]++] = e.sign;
  }
  // Sort each neighborhood ascending, signs kept aligned.
  for (std::uint32_t v = 0; v < n; ++v) {
    const std::uint32_t lo = g.adj_offsets_[v];
    const std::uint32_t hi = g.adj_offsets_[v + 1];
    std::vector<std::pair<std::uint32_t, EdgeSign>> entries;
    entries.reserve(hi - lo);
    for (std::uint32_t k = lo; k < hi; ++k) {
      entries.emplace_back(g.adj_[k], g.adj_signs_[k]);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::uint32_t k = lo; k < hi; ++k) {
      g.adj_[k] = entries[k - lo].first;
      g.adj_signs_[k] = entries[k - lo].second;
    }
  }

  g.attn_offsets_.assign(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    g.attn_offsets_[v + 1] = g.attn_offsets_[v] + g.degree(v) + 1;  // +self
  }
  return g;
}

BipartiteGraph BipartiteGraph::build(
    const std::vector<Interaction>& interactions, GraphOptions options) {
  std::vector<Id> users, items;
  users.reserve(interactions.size());
  items.reserve(interactions.size());
  for (const Interaction& it : interactions) {
    users.push_back(it.user_id);
    items.push_back(it.item_id);
  }
  return build(interactions, NodeIndex::build(std::move(users), std::move(items)),
               options);
}

std::vector<std::pair<std::uint32_t, EdgeSign>> BipartiteGraph::neighbors(
    std::uint32_t node) const {
  if (node >= num_nodes()) {
    throw ValidationError("node index " + std::to_string(node) +
                          " out of range");
  }
  std::vector<std::pair<std::uint32_t, EdgeSign>> out;
  out.reserve(degree(node) + 1);
  for (std::uint32_t k = adj_offsets_[node]; k < adj_offsets_[node + 1]; ++k) {
    out.emplace_back(adj_[k], adj_signs_[k]);
  }
  out.emplace_back(node, EdgeSign::Positive);  // self-loop last
  return out;
}

void write_edge_tsv(std::ostream& out, const BipartiteGraph& graph) {
  const NodeIndex& index = graph.index();
  for (const SignedEdge& e : graph.edges()) {
    out << index.user_ids[e.user_node] << '\t'
        << index.item_ids[e.item_node - index.num_users()] << '\t'
        << (e.sign == EdgeSign::Positive ? "positive" : "negative") << '\t'
        << e.rating << '\n';
  }
}

}  // namespace gatrec
