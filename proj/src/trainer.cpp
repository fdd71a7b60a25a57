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

#include "gatrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "gatrec/errors.hpp"

namespace gatrec {

namespace {

// Seed-stream tags, one per independent random purpose.
constexpr std::uint64_t kTagValSplit = 0x5EED0001;
constexpr std::uint64_t kTagValNeg = 0x5EED0002;
constexpr std::uint64_t kTagShuffle = 0x5EED0003;
constexpr std::uint64_t kTagNeg = 0x5EED0004;
constexpr std::uint64_t kTagDropout = 0x5EED0005;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // ln(1 + e^x) without overflow for large |x|.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

void TrainConfig::validate() const {
  if (alpha < 0.0) throw ValidationError("alpha must be >= 0");
  if (lr_init <= 0.0) throw ValidationError("lr_init must be > 0");
  if (lr_factor <= 0.0 || lr_factor > 1.0) {
    throw ValidationError("lr_factor must be in (0, 1]");
  }
  if (lr_patience < 1) throw ValidationError("lr_patience must be >= 1");
  if (early_stop_patience < 1) {
    throw ValidationError("early_stop_patience must be >= 1");
  }
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (max_epochs < 0) throw ValidationError("max_epochs must be >= 0");
  if (epsilon_neg < 0.0 || epsilon_neg > 1.0) {
    throw ValidationError("epsilon_neg must be in [0, 1]");
  }
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ValidationError("val_fraction must be in [0, 1)");
  }
  model.validate();
}

double bpr_loss(double s_pos, double s_neg) {
  return softplus(-(s_pos - s_neg));
}

double cosine_term(const Eigen::Ref<const Eigen::VectorXd>& u,
                   const Eigen::Ref<const Eigen::VectorXd>& i) {
  const double nu = u.norm();
  const double ni = i.norm();
  if (nu == 0.0 || ni == 0.0) return 1.0;
  return 1.0 - u.dot(i) / (nu * ni);
}

double total_loss(std::span<const Triplet> batch,
                  const Eigen::MatrixXd& node_embeddings, double alpha) {
  if (batch.empty()) throw UsageError("total_loss: empty batch");
  double sum = 0.0;
  for (const Triplet& t : batch) {
    const auto u = node_embeddings.row(t.user_node);
    const auto p = node_embeddings.row(t.pos_node);
    const auto n = node_embeddings.row(t.neg_node);
    sum += bpr_loss(u.dot(p), u.dot(n));
    if (alpha != 0.0) {
      sum += alpha * cosine_term(u.transpose(), p.transpose());
    }
  }
  return sum / static_cast<double>(batch.size());
}

double total_loss_with_grad(std::span<const Triplet> batch,
                            const Eigen::MatrixXd& node_embeddings,
                            double alpha, Eigen::MatrixXd& grad) {
  if (batch.empty()) throw UsageError("total_loss_with_grad: empty batch");
  grad = Eigen::MatrixXd::Zero(node_embeddings.rows(), node_embeddings.cols());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  for (const Triplet& t : batch) {
    const auto u = node_embeddings.row(t.user_node);
    const auto p = node_embeddings.row(t.pos_node);
    const auto n = node_embeddings.row(t.neg_node);
    const double gap = u.dot(p) - u.dot(n);
    sum += softplus(-gap);
    const double w = -sigmoid(-gap) * inv_b;  // d softplus(-gap) / d gap, /B
    grad.row(t.user_node) += w * (p - n);
    grad.row(t.pos_node) += w * u;
    grad.row(t.neg_node) -= w * u;

    if (alpha != 0.0) {
      const double nu = u.norm();
      const double np = p.norm();
      if (nu == 0.0 || np == 0.0) {
        sum += alpha;  // constant term, zero gradient
        continue;
      }
      const double cosine = u.dot(p) / (nu * np);
      sum += alpha * (1.0 - cosine);
      const double scale = alpha * inv_b;
      grad.row(t.user_node) -=
          scale * (p / (nu * np) - cosine * u / (nu * nu));
      grad.row(t.pos_node) -=
          scale * (u / (nu * np) - cosine * p / (np * np));
    }
  }
  return sum * inv_b;
}

NegativeSampler::NegativeSampler(
    const std::vector<Interaction>& train_interactions, const NodeIndex& index)
    : num_users_(index.num_users()), num_items_(index.num_items()) {
  positives_.resize(num_users_);
  negatives_.resize(num_users_);
  threes_.resize(num_users_);
  excluded_.resize(num_users_);
  for (const Interaction& it : train_interactions) {
    const std::uint32_t u = index.user_to_node.at(it.user_id);
    const std::uint32_t i = index.item_to_node.at(it.item_id);
    if (it.rating >= 4) {
      positives_[u].push_back(i);
    } else if (it.rating <= 2) {
      negatives_[u].push_back(i);
    } else {
      threes_[u].push_back(i);
    }
  }
  for (std::uint32_t u = 0; u < num_users_; ++u) {
    std::sort(positives_[u].begin(), positives_[u].end());
    std::sort(negatives_[u].begin(), negatives_[u].end());
    std::sort(threes_[u].begin(), threes_[u].end());
    excluded_[u].resize(positives_[u].size() + threes_[u].size());
    std::merge(positives_[u].begin(), positives_[u].end(), threes_[u].begin(),
               threes_[u].end(), excluded_[u].begin());
  }
}

bool NegativeSampler::is_positive(std::uint32_t user_node,
                                  std::uint32_t item_node) const {
  return std::binary_search(positives_[user_node].begin(),
                            positives_[user_node].end(), item_node);
}

std::uint32_t NegativeSampler::sample(std::uint32_t user_node, Rng& rng,
                                      double epsilon_neg) const {
  if (user_node >= num_users_) throw ValidationError("not a user node");
  const auto& negs = negatives_[user_node];
  if (!negs.empty() && rng.uniform01() < epsilon_neg) {
    return negs[rng.uniform_int(negs.size())];
  }
  const auto& excluded = excluded_[user_node];
  if (excluded.size() >= num_items_) {
    // No unobserved, un-3-rated item remains. Fall back to anything that is
    // still not a positive.
    if (!negs.empty()) return negs[rng.uniform_int(negs.size())];
    const auto& threes = threes_[user_node];
    if (!threes.empty()) return threes[rng.uniform_int(threes.size())];
    throw ValidationError("user has positively rated the entire catalog");
  }
  while (true) {
    const std::uint32_t item_node =
        num_users_ + static_cast<std::uint32_t>(rng.uniform_int(num_items_));
    if (!std::binary_search(excluded.begin(), excluded.end(), item_node)) {
      return item_node;
    }
  }
}

AdamWState make_adamw_state(const ModelParams& params) {
  AdamWState state;
  state.m = zero_like(params);
  state.v = zero_like(params);
  return state;
}

void adamw_step(ModelParams& params, const std::vector<LayerParams>& grads,
                AdamWState& state, double lr, double beta1, double beta2,
                double eps, double weight_decay) {
  auto p_views = tensor_views(params.layers);
  auto g_views = tensor_views(grads);
  auto m_views = tensor_views(state.m);
  auto v_views = tensor_views(state.v);
  if (p_views.size() != g_views.size()) {
    throw ValidationError("adamw_step: parameter/gradient structure mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < p_views.size(); ++t) {
    if (p_views[t].size() != g_views[t].size()) {
      throw ValidationError("adamw_step: tensor shape mismatch");
    }
    auto& p = p_views[t];
    const auto& g = g_views[t];
    auto& m = m_views[t];
    auto& v = v_views[t];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      m(i) = beta1 * m(i) + (1.0 - beta1) * g(i);
      v(i) = beta2 * v(i) + (1.0 - beta2) * g(i) * g(i);
      const double mhat = m(i) / bc1;
      const double vhat = v(i) / bc2;
      p(i) -= lr * weight_decay * p(i);
      p(i) -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void write_training_log(const std::filesystem::path& file,
                        const std::vector<EpochLog>& log) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write training log " + file.string());
  char buf[160];
  for (const EpochLog& row : log) {
    std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\t%.10g\n", row.epoch,
                  row.train_loss, row.val_loss, row.lr);
    out << buf;
  }
}

namespace {

struct FeatureAdamW {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
};

void adamw_step_features(Eigen::MatrixXd& features, const Eigen::MatrixXd& g,
                         FeatureAdamW& state, std::uint64_t step, double lr,
                         double beta1, double beta2, double eps,
                         double weight_decay) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    double& m = state.m.data()[i];
    double& v = state.v.data()[i];
    const double gi = g.data()[i];
    m = beta1 * m + (1.0 - beta1) * gi;
    v = beta2 * v + (1.0 - beta2) * gi * gi;
    double& p = features.data()[i];
    p -= lr * weight_decay * p;
    p -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
  }
}

}  // namespace

TrainedModel train_with_init(const BipartiteGraph& graph,
                             const std::vector<Interaction>& train_interactions,
                             const TrainConfig& config, InitResult init,
                             std::vector<EpochLog>* log) {
  config.validate();
  const NodeIndex& index = graph.index();

  // Positive edges, in edge-list order.
  std::vector<Triplet> positives;
  for (const SignedEdge& e : graph.edges()) {
    if (e.sign == EdgeSign::Positive) {
      positives.push_back(Triplet{e.user_node, e.item_node, 0});
    }
  }
  if (positives.empty()) {
    throw EmptyGraphError("no positive edges to train on");
  }

  NegativeSampler sampler(train_interactions, index);

  // Validation holdout (kept in the graph, excluded from training triplets).
  std::vector<std::size_t> order(positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  {
    Rng rng(Rng::derive(config.seed, kTagValSplit));
    rng.shuffle(order);
  }
  const std::size_t val_count = static_cast<std::size_t>(
      config.val_fraction * static_cast<double>(positives.size()));
  std::vector<Triplet> val_triplets;
  std::vector<Triplet> train_pool;
  {
    Rng val_neg_rng(Rng::derive(config.seed, kTagValNeg));
    for (std::size_t i = 0; i < order.size(); ++i) {
      Triplet t = positives[order[i]];
      if (i < val_count) {
        t.neg_node = sampler.sample(t.user_node, val_neg_rng, config.epsilon_neg);
        val_triplets.push_back(t);
      } else {
        train_pool.push_back(t);
      }
    }
  }

  ModelParams params = std::move(init.params);
  Eigen::MatrixXd features = std::move(init.features);
  AdamWState opt = make_adamw_state(params);
  FeatureAdamW feature_opt;
  if (config.train_features) {
    feature_opt.m = Eigen::MatrixXd::Zero(features.rows(), features.cols());
    feature_opt.v = Eigen::MatrixXd::Zero(features.rows(), features.cols());
  }

  double lr = config.lr_init;
  double best_monitor = std::numeric_limits<double>::infinity();
  ModelParams best_params = params;
  Eigen::MatrixXd best_features = features;
  int epochs_since_improve = 0;
  int plateau_count = 0;
  double last_train_loss = 0.0;
  double last_val_loss = 0.0;
  int epochs_run = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng(
        Rng::derive(config.seed, kTagShuffle + 1000ULL * (epoch + 1)));
    Rng neg_rng(Rng::derive(config.seed, kTagNeg + 1000ULL * (epoch + 1)));
    Rng drop_rng(Rng::derive(config.seed, kTagDropout + 1000ULL * (epoch + 1)));
    shuffle_rng.shuffle(train_pool);

    double loss_sum = 0.0;
    std::size_t triplet_count = 0;
    for (std::size_t begin = 0; begin < train_pool.size();
         begin += config.batch_size) {
      const std::size_t count =
          std::min(config.batch_size, train_pool.size() - begin);
      std::vector<Triplet> batch(train_pool.begin() + begin,
                                 train_pool.begin() + begin + count);
      for (Triplet& t : batch) {
        t.neg_node = sampler.sample(t.user_node, neg_rng, config.epsilon_neg);
      }

      ForwardState fwd = forward(graph, params, features, true, &drop_rng);
      Eigen::MatrixXd emb_grad;
      const double batch_loss =
          total_loss_with_grad(batch, fwd.output, config.alpha, emb_grad);
      GradientSet grads =
          backward(graph, params, fwd, emb_grad, config.train_features);
      adamw_step(params, grads.layers, opt, lr, config.beta1, config.beta2,
                 config.adam_eps, config.weight_decay);
      if (config.train_features) {
        adamw_step_features(features, grads.features, feature_opt, opt.step,
                            lr, config.beta1, config.beta2, config.adam_eps,
                            config.weight_decay);
      }
      loss_sum += batch_loss * static_cast<double>(count);
      triplet_count += count;
    }
    const double train_loss = loss_sum / static_cast<double>(triplet_count);

    ForwardState eval_fwd = forward(graph, params, features, false, nullptr);
    const double val_loss =
        val_triplets.empty()
            ? train_loss
            : total_loss(val_triplets, eval_fwd.output, config.alpha);

    last_train_loss = train_loss;
    last_val_loss = val_loss;
    epochs_run = epoch + 1;
    if (log) log->push_back(EpochLog{epoch, train_loss, val_loss, lr});

    if (val_loss < best_monitor) {
      best_monitor = val_loss;
      best_params = params;
      best_features = features;
      epochs_since_improve = 0;
      plateau_count = 0;
    } else {
      ++epochs_since_improve;
      ++plateau_count;
      if (plateau_count >= config.lr_patience) {
        lr *= config.lr_factor;
        plateau_count = 0;
      }
      if (epochs_since_improve >= config.early_stop_patience) break;
    }
  }

  TrainedModel model;
  model.params =
      std::isinf(best_monitor) ? std::move(params) : std::move(best_params);
  const Eigen::MatrixXd& final_features =
      std::isinf(best_monitor) ? features : best_features;
  ForwardState final_fwd =
      forward(graph, model.params, final_features, false, nullptr);
  Embeddings emb = split_embeddings(final_fwd.output, index);
  model.user_ids = index.user_ids;
  model.item_ids = index.item_ids;
  model.user_embeddings = std::move(emb.users);
  model.item_embeddings = std::move(emb.items);
  model.meta.seed = config.seed;
  model.meta.epochs_run = static_cast<std::uint32_t>(epochs_run);
  model.meta.final_train_loss = last_train_loss;
  model.meta.final_val_loss = last_val_loss;
  model.meta.best_val_loss =
      std::isinf(best_monitor) ? last_val_loss : best_monitor;
  return model;
}

TrainedModel train(const BipartiteGraph& graph,
                   const std::vector<Interaction>& train_interactions,
                   const TrainConfig& config, const EmbeddingTable* table,
                   std::vector<EpochLog>* log) {
  config.validate();
  InitResult init = init_params(config.seed, config.model, config.init_mode,
                                graph, table);
  return train_with_init(graph, train_interactions, config, std::move(init),
                         log);
}

}  // namespace gatrec
