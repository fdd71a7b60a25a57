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

#ifndef GATREC_TRAINER_HPP_
#define GATREC_TRAINER_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "gatrec/model.hpp"

namespace gatrec {

struct TrainConfig {
  double alpha = 0.5;           // cosine-alignment weight
  double lr_init = 1e-3;
  double lr_factor = 0.4;
  int lr_patience = 5;          // epochs without improvement before decay
  int early_stop_patience = 10;
  double weight_decay = 1e-5;
  std::size_t batch_size = 1024;  // positive pairs per batch
  int max_epochs = 200;
  std::uint64_t seed = 42;
  double epsilon_neg = 0.8;     // chance of drawing an explicit negative
  double val_fraction = 0.1;
  InitMode init_mode = InitMode::TextInit;
  ModelConfig model;
  bool train_features = false;  // initial node features frozen by default
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// -ln sigma(s_pos - s_neg), evaluated via the overflow-safe softplus form.
double bpr_loss(double s_pos, double s_neg);

/// 1 - cos(u, i). Either vector zero: cosine defined as 0, so the term is 1.
double cosine_term(const Eigen::Ref<const Eigen::VectorXd>& u,
                   const Eigen::Ref<const Eigen::VectorXd>& i);

/// (user, positive item, sampled negative item) as node indices.
struct Triplet {
  std::uint32_t user_node = 0;
  std::uint32_t pos_node = 0;
  std::uint32_t neg_node = 0;
};

/// Mean over triplets of bpr_loss + alpha * cosine_term(user, positive).
/// Throws UsageError on an empty batch.
double total_loss(std::span<const Triplet> batch,
                  const Eigen::MatrixXd& node_embeddings, double alpha);

/// Same reduction, also producing d(loss)/d(node_embeddings).
double total_loss_with_grad(std::span<const Triplet> batch,
                            const Eigen::MatrixXd& node_embeddings,
                            double alpha, Eigen::MatrixXd& grad);

/// Negative sampling over the training split. With probability epsilon_neg
/// a user with explicit negatives draws uniformly from them; otherwise the
/// draw is uniform over items neither positive nor rated 3 by the user. A
/// training positive is never returned.
class NegativeSampler {
 public:
  NegativeSampler(const std::vector<Interaction>& train_interactions,
                  const NodeIndex& index);

  std::uint32_t sample(std::uint32_t user_node, Rng& rng,
                       double epsilon_neg) const;
  bool is_positive(std::uint32_t user_node, std::uint32_t item_node) const;
  const std::vector<std::uint32_t>& explicit_negatives(
      std::uint32_t user_node) const {
    return negatives_[user_node];
  }

 private:
  std::uint32_t num_users_ = 0;
  std::uint32_t num_items_ = 0;
  std::vector<std::vector<std::uint32_t>> positives_;  // sorted item nodes
  std::vector<std::vector<std::uint32_t>> negatives_;
  std::vector<std::vector<std::uint32_t>> threes_;
  std::vector<std::vector<std::uint32_t>> excluded_;   // positives + threes
};

/// AdamW first/second moment buffers, shaped like the parameters.
struct AdamWState {
  std::vector<LayerParams> m;
  std::vector<LayerParams> v;
  std::uint64_t step = 0;
};

AdamWState make_adamw_state(const ModelParams& params);

/// One decoupled-weight-decay Adam step: theta -= lr*wd*theta (decay, from
/// the pre-step value), then theta -= lr*mhat/(sqrt(vhat)+eps) with
/// bias-corrected moments. Increments the step counter once.
void adamw_step(ModelParams& params, const std::vector<LayerParams>& grads,
                AdamWState& state, double lr, double beta1, double beta2,
                double eps, double weight_decay);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

/// TSV: `epoch<TAB>train_loss<TAB>val_loss<TAB>lr`, one row per epoch.
void write_training_log(const std::filesystem::path& file,
                        const std::vector<EpochLog>& log);

/// Full training loop: seeded validation holdout of positive edges
/// (training triplets exclude them; the graph keeps them for message
/// passing), per-epoch seeded shuffling and negative resampling, AdamW
/// updates, plateau LR decay, early stopping, best-checkpoint restore.
/// Validation triplets get their negatives once, at split time, so the
/// monitored loss is comparable across epochs.
TrainedModel train(const BipartiteGraph& graph,
                   const std::vector<Interaction>& train_interactions,
                   const TrainConfig& config, const EmbeddingTable* table,
                   std::vector<EpochLog>* log = nullptr);

/// Same loop from a caller-supplied initialization.
TrainedModel train_with_init(const BipartiteGraph& graph,
                             const std::vector<Interaction>& train_interactions,
                             const TrainConfig& config, InitResult init,
                             std::vector<EpochLog>* log = nullptr);

}  // namespace gatrec

#endif  // GATREC_TRAINER_HPP_
