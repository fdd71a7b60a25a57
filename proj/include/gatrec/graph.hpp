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

#ifndef GATREC_GRAPH_HPP_
#define GATREC_GRAPH_HPP_

#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gatrec/types.hpp"

namespace gatrec {

enum class EdgeSign : std::uint8_t { Positive, Negative };

/// Maps external ids onto node indices: users occupy [0, U), items [U, U+I).
struct NodeIndex {
  std::vector<Id> user_ids;  // sorted ascending
  std::vector<Id> item_ids;  // sorted ascending
  std::unordered_map<Id, std::uint32_t> user_to_node;
  std::unordered_map<Id, std::uint32_t> item_to_node;

  static NodeIndex build(std::vector<Id> users, std::vector<Id> items);

  std::uint32_t num_users() const {
    return static_cast<std::uint32_t>(user_ids.size());
  }
  std::uint32_t num_items() const {
    return static_cast<std::uint32_t>(item_ids.size());
  }
  std::uint32_t num_nodes() const { return num_users() + num_items(); }
  bool is_user_node(std::uint32_t node) const { return node < num_users(); }
};

/// One explicit rating as a signed edge between node indices.
struct SignedEdge {
  std::uint32_t user_node = 0;
  std::uint32_t item_node = 0;
  EdgeSign sign = EdgeSign::Positive;
  int rating = 0;
};

struct GraphOptions {
  /// Ablation knob: exclude Negative edges from message passing. The edge
  /// list (and hence the loss/sampler view) always keeps both signs.
  bool positive_edges_only = false;
};

/// Bipartite user-item graph with both directions materialized in CSR.
/// Immutable after construction; safe for concurrent reads. Every node has
/// an implicit self-loop, reported by neighbors() as the final entry.
class BipartiteGraph {
 public:
  static BipartiteGraph build(const std::vector<Interaction>& interactions,
                              NodeIndex index, GraphOptions options = {});
  static BipartiteGraph build(const std::vector<Interaction>& interactions,
                              GraphOptions options = {});

  const NodeIndex& index() const { return index_; }
  const std::vector<SignedEdge>& edges() const { return edges_; }
  std::uint32_t num_nodes() const { return index_.num_nodes(); }

  /// Sorted (neighbor, sign) pairs followed by (node, Positive) for the
  /// self-loop. Throws ValidationError for an out-of-range node.
  std::vector<std::pair<std::uint32_t, EdgeSign>> neighbors(
      std::uint32_t node) const;

  /// CSR access for message passing (self-loops not stored).
  std::uint32_t degree(std::uint32_t node) const {
    return adj_offsets_[node + 1] - adj_offsets_[node];
  }
  const std::uint32_t* adj_begin(std::uint32_t node) const {
    return adj_.data() + adj_offsets_[node];
  }
  const std::vector<std::uint32_t>& adj_offsets() const { return adj_offsets_; }
  const std::vector<std::uint32_t>& adj() const { return adj_; }
  const std::vector<EdgeSign>& adj_signs() const { return adj_signs_; }

  /// Attention-entry layout: for each node, its CSR neighbors then one self
  /// entry. attn_offsets()[n] is the first entry of node n.
  const std::vector<std::size_t>& attn_offsets() const { return attn_offsets_; }
  std::size_t num_attn_entries() const { return attn_offsets_.back(); }

 private:
  NodeIndex index_;
  std::vector<SignedEdge> edges_;
  std::vector<std::uint32_t> adj_offsets_;
  std::vector<std::uint32_t> adj_;
  std::vector<EdgeSign> adj_signs_;
  std::vector<std::size_t> attn_offsets_;
};

/// Debug edge dump: `user_id<TAB>item_id<TAB>sign<TAB>rating` per line.
void write_edge_tsv(std::ostream& out, const BipartiteGraph& graph);

}  // namespace gatrec

#endif  // GATREC_GRAPH_HPP_
