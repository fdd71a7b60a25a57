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

#ifndef GATREC_MODEL_HPP_
#define GATREC_MODEL_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gatrec/embedder.hpp"
#include "gatrec/graph.hpp"
#include "gatrec/rng.hpp"

namespace gatrec {

/// Architecture constants. Defaults: 384-d text features into three layers
/// of 4 heads; hidden layers concatenate 4x16 heads to 64, the final layer
/// averages 4 heads of 64. Per layer the operation order is
/// aggregate -> add skip -> layer-norm -> LeakyReLU; dropout acts on the
/// attention coefficients only.
struct ModelConfig {
  std::uint32_t input_dim = 384;
  std::uint32_t hidden_dim = 64;
  std::uint32_t output_dim = 64;
  std::uint32_t num_heads = 4;
  std::uint32_t num_layers = 3;
  double dropout = 0.2;
  double leaky_slope = 0.2;     // feature activation
  double attn_slope = 0.2;      // attention logit nonlinearity
  double layer_norm_eps = 1e-8;

  bool averages_heads(std::uint32_t layer) const {
    return layer + 1 == num_layers;
  }
  std::uint32_t layer_in_dim(std::uint32_t layer) const {
    return layer == 0 ? input_dim : hidden_dim;
  }
  std::uint32_t layer_out_dim(std::uint32_t layer) const {
    return averages_heads(layer) ? output_dim : hidden_dim;
  }
  std::uint32_t layer_head_dim(std::uint32_t layer) const {
    return averages_heads(layer) ? output_dim : hidden_dim / num_heads;
  }
  void validate() const;
};

/// One GAT layer: per-head projection W and attention vector a, a skip
/// projection (identity-initialized when square), and layer-norm gain/bias.
struct LayerParams {
  std::vector<Eigen::MatrixXd> head_weight;  // H x (d_head x d_in)
  std::vector<Eigen::VectorXd> head_attn;    // H x (2*d_head)
  Eigen::MatrixXd skip;                      // d_out x d_in
  Eigen::VectorXd gamma;                     // d_out
  Eigen::VectorXd beta;                      // d_out
};

struct ModelParams {
  ModelConfig config;
  std::vector<LayerParams> layers;
};

/// Gradients (or optimizer moments) shaped exactly like the parameters.
struct GradientSet {
  std::vector<LayerParams> layers;
  Eigen::MatrixXd features;  // 0x0 unless feature gradients were requested
};

/// Flat views over every tensor in fixed order (per layer: W_h..., a_h...,
/// skip, gamma, beta). Parameter/gradient/moment structures visited with
/// the same call line up element-for-element.
std::vector<Eigen::Map<Eigen::VectorXd>> tensor_views(
    std::vector<LayerParams>& layers);
std::vector<Eigen::Map<const Eigen::VectorXd>> tensor_views(
    const std::vector<LayerParams>& layers);

std::vector<LayerParams> zero_like(const ModelParams& params);

enum class InitMode { TextInit, RandomInit };

struct InitResult {
  ModelParams params;
  Eigen::MatrixXd features;  // N x input_dim initial node features
};

/// Seeded initialization. Weight matrices and attention vectors are
/// Xavier-uniform (bound sqrt(6/(fan_in+fan_out))); gamma=1, beta=0; square
/// skip projections start as identity. TextInit reads node features from
/// the embedding table; RandomInit draws an N x input_dim Xavier matrix
/// (the ablated configuration).
InitResult init_params(std::uint64_t seed, const ModelConfig& config,
                       InitMode mode, const BipartiteGraph& graph,
                       const EmbeddingTable* table);

/// Per-layer activations retained for backward.
struct HeadState {
  Eigen::MatrixXd z;                    // N x d_head
  std::vector<double> e_pre;            // attention logits before LeakyReLU
  std::vector<double> alpha;            // softmax coefficients
  std::vector<double> alpha_eff;        // after dropout (== alpha in eval)
  std::vector<std::uint8_t> keep_mask;  // train mode only
  std::vector<double> renorm_sum;       // per node, train mode only
  std::vector<std::uint8_t> renorm_fallback;  // node kept undropped
};

struct LayerState {
  Eigen::MatrixXd input;    // N x d_in
  std::vector<HeadState> heads;
  Eigen::MatrixXd xhat;     // layer-norm output before gamma/beta
  Eigen::VectorXd inv_std;  // per node
  Eigen::MatrixXd ln_out;   // after gamma/beta, before activation
  bool train_mode = false;
};

struct ForwardState {
  std::vector<LayerState> layers;
  Eigen::MatrixXd output;  // N x output_dim
};

/// One GAT layer. Per head h: z = W_h x; logits
/// e_ij = LeakyReLU(a_h . [z_i || z_j]) over sorted neighbors plus the
/// trailing self-loop; softmax with max-subtraction; in train mode the
/// coefficients are dropped out and the survivors renormalized (a node
/// whose entries all drop keeps its original coefficients). Head outputs
/// are concatenated (hidden layers) or averaged (final layer), the skip
/// projection of the input is added, then layer-norm and LeakyReLU.
/// Neighborhood sums run in ascending-neighbor order in 64-bit floats, so
/// results are bit-reproducible. Throws NumericError on non-finite output.
Eigen::MatrixXd gat_layer_forward(const Eigen::MatrixXd& input,
                                  const BipartiteGraph& graph,
                                  const LayerParams& layer,
                                  const ModelConfig& config,
                                  std::uint32_t layer_idx, bool train_mode,
                                  Rng* rng, LayerState* state);

/// Full stack; features must be N x input_dim.
ForwardState forward(const BipartiteGraph& graph, const ModelParams& params,
                     const Eigen::MatrixXd& features, bool train_mode,
                     Rng* rng);

/// Final embeddings split by node-index ranges.
struct Embeddings {
  Eigen::MatrixXd users;  // U x output_dim
  Eigen::MatrixXd items;  // I x output_dim
};
Embeddings split_embeddings(const Eigen::MatrixXd& output,
                            const NodeIndex& index);

/// Dot-product relevance score.
double score(const Eigen::Ref<const Eigen::VectorXd>& user_vec,
             const Eigen::Ref<const Eigen::VectorXd>& item_vec);

/// Exact reverse-mode gradients of a scalar loss with upstream gradient
/// `output_grad` (N x output_dim) w.r.t. every parameter tensor, and the
/// input features when requested. Requires the ForwardState of the pass
/// being differentiated.
GradientSet backward(const BipartiteGraph& graph, const ModelParams& params,
                     const ForwardState& state,
                     const Eigen::MatrixXd& output_grad,
                     bool want_feature_grad = false);

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::uint32_t epochs_run = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double best_val_loss = 0.0;
};

/// Trained parameters plus final embeddings, self-describing via the node
/// id lists (row r of user_embeddings belongs to user_ids[r]).
struct TrainedModel {
  ModelParams params;
  std::vector<Id> user_ids;
  std::vector<Id> item_ids;
  Eigen::MatrixXd user_embeddings;
  Eigen::MatrixXd item_embeddings;
  TrainingMeta meta;

  bool has_user(Id user) const;
  double score_ids(Id user, Id item) const;

  /// Binary checkpoint: `GATC` magic | version u32 | seed u64 | config |
  /// id lists | meta | parameter tensors | embeddings, all little-endian,
  /// tensors as f32 in row-major order. Layout detailed in the README.
  void save(const std::filesystem::path& file) const;
  static TrainedModel load(const std::filesystem::path& file);
};

}  // namespace gatrec

#endif  // GATREC_MODEL_HPP_
