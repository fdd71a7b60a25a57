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

#include "gatrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gatrec/binio.hpp"
#include "gatrec/errors.hpp"

namespace gatrec {

void ModelConfig::validate() const {
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  if (num_heads < 1) throw ValidationError("num_heads must be >= 1");
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw ValidationError("dimensions must be >= 1");
  }
  if (hidden_dim % num_heads != 0) {
    throw ValidationError("hidden_dim must be divisible by num_heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ValidationError("dropout must be in [0, 1)");
  }
}

std::vector<Eigen::Map<Eigen::VectorXd>> tensor_views(
    std::vector<LayerParams>& layers) {
  std::vector<Eigen::Map<Eigen::VectorXd>> views;
  for (LayerParams& layer : layers) {
    for (auto& w : layer.head_weight) views.emplace_back(w.data(), w.size());
    for (auto& a : layer.head_attn) views.emplace_back(a.data(), a.size());
    views.emplace_back(layer.skip.data(), layer.skip.size());
    views.emplace_back(layer.gamma.data(), layer.gamma.size());
    views.emplace_back(layer.beta.data(), layer.beta.size());
  }
  return views;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> tensor_views(
    const std::vector<LayerParams>& layers) {
  std::vector<Eigen::Map<const Eigen::VectorXd>> views;
  for (const LayerParams& layer : layers) {
    for (const auto& w : layer.head_weight)
      views.emplace_back(w.data(), w.size());
    for (const auto& a : layer.head_attn)
      views.emplace_back(a.data(), a.size());
    views.emplace_back(layer.skip.data(), layer.skip.size());
    views.emplace_back(layer.gamma.data(), layer.gamma.size());
    views.emplace_back(layer.beta.data(), layer.beta.size());
  }
  return views;
}

std::vector<LayerParams> zero_like(const ModelParams& params) {
  std::vector<LayerParams> out(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& src = params.layers[l];
    LayerParams& dst = out[l];
    for (const auto& w : src.head_weight) {
      dst.head_weight.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& a : src.head_attn) {
      dst.head_attn.push_back(Eigen::VectorXd::Zero(a.size()));
    }
    dst.skip = Eigen::MatrixXd::Zero(src.skip.rows(), src.skip.cols());
    dst.gamma = Eigen::VectorXd::Zero(src.gamma.size());
    dst.beta = Eigen::VectorXd::Zero(src.beta.size());
  }
  return out;
}

namespace {

double xavier_bound(std::uint32_t fan_in, std::uint32_t fan_out) {
  return std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
}

// Row-major fill so the draw order is independent of Eigen's storage order.
void fill_xavier(Eigen::MatrixXd& m, std::uint32_t fan_in,
                 std::uint32_t fan_out, Rng& rng) {
  const double bound = xavier_bound(fan_in, fan_out);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

void fill_xavier(Eigen::VectorXd& v, std::uint32_t fan_in,
                 std::uint32_t fan_out, Rng& rng) {
  const double bound = xavier_bound(fan_in, fan_out);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = rng.uniform(-bound, bound);
  }
}

}  // namespace

InitResult init_params(std::uint64_t seed, const ModelConfig& config,
                       InitMode mode, const BipartiteGraph& graph,
                       const EmbeddingTable* table) {
  config.validate();
  Rng rng(Rng::derive(seed, 0xA11C));

  InitResult result;
  result.params.config = config;
  for (std::uint32_t l = 0; l < config.num_layers; ++l) {
    const std::uint32_t d_in = config.layer_in_dim(l);
    const std::uint32_t d_out = config.layer_out_dim(l);
    const std::uint32_t d_head = config.layer_head_dim(l);

    LayerParams layer;
    for (std::uint32_t h = 0; h < config.num_heads; ++h) {
      Eigen::MatrixXd w(d_head, d_in);
      fill_xavier(w, d_in, d_head, rng);
      layer.head_weight.push_back(std::move(w));
    }
    for (std::uint32_t h = 0; h < config.num_heads; ++h) {
      Eigen::VectorXd a(2 * d_head);
      fill_xavier(a, 2 * d_head, 1, rng);
      layer.head_attn.push_back(std::move(a));
    }
    if (d_in == d_out) {
      layer.skip = Eigen::MatrixXd::Identity(d_out, d_in);
    } else {
      layer.skip = Eigen::MatrixXd(d_out, d_in);
      fill_xavier(layer.skip, d_in, d_out, rng);
    }
    layer.gamma = Eigen::VectorXd::Ones(d_out);
    layer.beta = Eigen::VectorXd::Zero(d_out);
    result.params.layers.push_back(std::move(layer));
  }

  const NodeIndex& index = graph.index();
  const std::uint32_t n = index.num_nodes();
  result.features = Eigen::MatrixXd(n, config.input_dim);
  if (mode == InitMode::TextInit) {
    if (table == nullptr) {
      throw ValidationError("TextInit requires an embedding table");
    }
    if (table->dim != config.input_dim) {
      throw ValidationError("embedding table dimension " +
                            std::to_string(table->dim) +
                            " != input_dim " + std::to_string(config.input_dim));
    }
    for (std::uint32_t u = 0; u < index.num_users(); ++u) {
      const auto it = table->user_vectors.find(index.user_ids[u]);
      if (it == table->user_vectors.end()) {
        throw ValidationError("embedding table missing user " +
                              std::to_string(index.user_ids[u]));
      }
      for (std::uint32_t d = 0; d < config.input_dim; ++d) {
        result.features(u, d) = static_cast<double>(it->second[d]);
      }
    }
    for (std::uint32_t i = 0; i < index.num_items(); ++i) {
      const auto it = table->item_vectors.find(index.item_ids[i]);
      if (it == table->item_vectors.end()) {
        throw ValidationError("embedding table missing item " +
                              std::to_string(index.item_ids[i]));
      }
      for (std::uint32_t d = 0; d < config.input_dim; ++d) {
        result.features(index.num_users() + i, d) =
            static_cast<double>(it->second[d]);
      }
    }
  } else {
    // Ablated configuration: the feature matrix is one Xavier tensor.
    fill_xavier(result.features, n, config.input_dim, rng);
  }
  return result;
}

namespace {

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
double leaky_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

[[noreturn]] void throw_nonfinite(const Eigen::MatrixXd& m,
                                  std::uint32_t layer_idx) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw NumericError("non-finite value at layer " +
                           std::to_string(layer_idx) + ", node " +
                           std::to_string(r));
      }
    }
  }
  throw NumericError("non-finite value at layer " + std::to_string(layer_idx));
}

}  // namespace

Eigen::MatrixXd gat_layer_forward(const Eigen::MatrixXd& input,
                                  const BipartiteGraph& graph,
                                  const LayerParams& layer,
                                  const ModelConfig& config,
                                  std::uint32_t layer_idx, bool train_mode,
                                  Rng* rng, LayerState* state) {
  const std::uint32_t n = graph.num_nodes();
  const std::uint32_t d_out = config.layer_out_dim(layer_idx);
  const std::uint32_t d_head = config.layer_head_dim(layer_idx);
  const bool average = config.averages_heads(layer_idx);
  const std::size_t entries = graph.num_attn_entries();
  const bool use_dropout = train_mode && config.dropout > 0.0;
  if (use_dropout && rng == nullptr) {
    throw ValidationError("train-mode forward with dropout needs an rng");
  }
  if (static_cast<std::uint32_t>(input.rows()) != n ||
      static_cast<std::uint32_t>(input.cols()) !=
          config.layer_in_dim(layer_idx)) {
    throw ValidationError("layer input shape mismatch");
  }

  if (state) {
    state->input = input;
    state->heads.assign(config.num_heads, HeadState{});
    state->train_mode = train_mode;
  }

  Eigen::MatrixXd combined = Eigen::MatrixXd::Zero(n, d_out);
  const auto& offsets = graph.attn_offsets();

  for (std::uint32_t h = 0; h < config.num_heads; ++h) {
    Eigen::MatrixXd z = input * layer.head_weight[h].transpose();  // N x d_head
    const Eigen::VectorXd a_src = layer.head_attn[h].head(d_head);
    const Eigen::VectorXd a_dst = layer.head_attn[h].tail(d_head);
    const Eigen::VectorXd s = z * a_src;  // per-node source term
    const Eigen::VectorXd t = z * a_dst;  // per-node destination term

    std::vector<double> e_pre(entries), alpha(entries), alpha_eff(entries);
    std::vector<std::uint8_t> keep_mask;
    std::vector<double> renorm_sum;
    std::vector<std::uint8_t> renorm_fallback;
    if (use_dropout) {
      keep_mask.assign(entries, 1);
      renorm_sum.assign(n, 0.0);
      renorm_fallback.assign(n, 0);
    }

    for (std::uint32_t i = 0; i < n; ++i) {
      const std::size_t lo = offsets[i];
      const std::size_t hi = offsets[i + 1];
      const std::uint32_t deg = graph.degree(i);
      const std::uint32_t* nbr = graph.adj_begin(i);

      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t k = lo; k < hi; ++k) {
        const std::uint32_t j =
            k + 1 == hi ? i : nbr[k - lo];  // self-loop is the last entry
        e_pre[k] = s(i) + t(j);
        const double e = leaky(e_pre[k], config.attn_slope);
        if (e > max_logit) max_logit = e;
        alpha[k] = e;  // temporarily the activated logit
      }
      double denom = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        alpha[k] = std::exp(alpha[k] - max_logit);
        denom += alpha[k];
      }
      for (std::size_t k = lo; k < hi; ++k) alpha[k] /= denom;

      if (use_dropout) {
        double kept_sum = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
          keep_mask[k] = rng->bernoulli(1.0 - config.dropout) ? 1 : 0;
          if (keep_mask[k]) kept_sum += alpha[k];
        }
        if (kept_sum > 0.0) {
          renorm_sum[i] = kept_sum;
          for (std::size_t k = lo; k < hi; ++k) {
            alpha_eff[k] = keep_mask[k] ? alpha[k] / kept_sum : 0.0;
          }
        } else {
          renorm_fallback[i] = 1;
          for (std::size_t k = lo; k < hi; ++k) alpha_eff[k] = alpha[k];
        }
      } else {
        for (std::size_t k = lo; k < hi; ++k) alpha_eff[k] = alpha[k];
      }

      // Weighted aggregation in ascending-neighbor order, self last.
      Eigen::VectorXd m = Eigen::VectorXd::Zero(d_head);
      for (std::size_t k = lo; k < hi; ++k) {
        const std::uint32_t j = k + 1 == hi ? i : nbr[k - lo];
        m += alpha_eff[k] * z.row(j).transpose();
      }
      (void)deg;
      if (average) {
        combined.row(i) += m.transpose() / config.num_heads;
      } else {
        combined.block(i, h * d_head, 1, d_head) = m.transpose();
      }
    }

    if (state) {
      HeadState& hs = state->heads[h];
      hs.z = std::move(z);
      hs.e_pre = std::move(e_pre);
      hs.alpha = std::move(alpha);
      hs.alpha_eff = std::move(alpha_eff);
      hs.keep_mask = std::move(keep_mask);
      hs.renorm_sum = std::move(renorm_sum);
      hs.renorm_fallback = std::move(renorm_fallback);
    }
  }

  Eigen::MatrixXd pre = combined + input * layer.skip.transpose();

  Eigen::MatrixXd xhat(n, d_out);
  Eigen::VectorXd inv_std(n);
  Eigen::MatrixXd ln_out(n, d_out);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double mean = pre.row(i).mean();
    const double var =
        (pre.row(i).array() - mean).square().sum() / static_cast<double>(d_out);
    const double is = 1.0 / std::sqrt(var + config.layer_norm_eps);
    inv_std(i) = is;
    xhat.row(i) = (pre.row(i).array() - mean) * is;
    ln_out.row(i) = xhat.row(i).cwiseProduct(layer.gamma.transpose()) +
                    layer.beta.transpose();
  }

  Eigen::MatrixXd out(n, d_out);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t d = 0; d < d_out; ++d) {
      out(i, d) = leaky(ln_out(i, d), config.leaky_slope);
    }
  }
  if (!out.allFinite()) throw_nonfinite(out, layer_idx);

  if (state) {
    state->xhat = std::move(xhat);
    state->inv_std = std::move(inv_std);
    state->ln_out = std::move(ln_out);
  }
  return out;
}

ForwardState forward(const BipartiteGraph& graph, const ModelParams& params,
                     const Eigen::MatrixXd& features, bool train_mode,
                     Rng* rng) {
  const ModelConfig& config = params.config;
  if (static_cast<std::uint32_t>(features.rows()) != graph.num_nodes() ||
      static_cast<std::uint32_t>(features.cols()) != config.input_dim) {
    throw ValidationError("feature matrix shape mismatch");
  }
  ForwardState state;
  state.layers.resize(config.num_layers);
  Eigen::MatrixXd h = features;
  for (std::uint32_t l = 0; l < config.num_layers; ++l) {
    h = gat_layer_forward(h, graph, params.layers[l], config, l, train_mode,
                          rng, &state.layers[l]);
  }
  state.output = std::move(h);
  return state;
}

Embeddings split_embeddings(const Eigen::MatrixXd& output,
                            const NodeIndex& index) {
  Embeddings e;
  e.users = output.topRows(index.num_users());
  e.items = output.bottomRows(index.num_items());
  return e;
}

double score(const Eigen::Ref<const Eigen::VectorXd>& user_vec,
             const Eigen::Ref<const Eigen::VectorXd>& item_vec) {
  if (user_vec.size() != item_vec.size()) {
    throw ValidationError("score: dimension mismatch");
  }
  return user_vec.dot(item_vec);
}

GradientSet backward(const BipartiteGraph& graph, const ModelParams& params,
                     const ForwardState& state,
                     const Eigen::MatrixXd& output_grad,
                     bool want_feature_grad) {
  const ModelConfig& config = params.config;
  if (state.layers.size() != config.num_layers || state.output.size() == 0) {
    throw UsageError("backward requires the forward state of this model");
  }
  const std::uint32_t n = graph.num_nodes();
  if (static_cast<std::uint32_t>(output_grad.rows()) != n ||
      static_cast<std::uint32_t>(output_grad.cols()) != config.output_dim) {
    throw ValidationError("output_grad shape mismatch");
  }

  GradientSet grads;
  grads.layers = zero_like(params);
  const auto& offsets = graph.attn_offsets();

  Eigen::MatrixXd g = output_grad;  // gradient w.r.t. current layer's output
  for (std::uint32_t li = config.num_layers; li-- > 0;) {
    const LayerParams& layer = params.layers[li];
    const LayerState& ls = state.layers[li];
    LayerParams& lg = grads.layers[li];
    const std::uint32_t d_out = config.layer_out_dim(li);
    const std::uint32_t d_head = config.layer_head_dim(li);
    const bool average = config.averages_heads(li);
    const bool use_dropout = ls.train_mode && config.dropout > 0.0;

    // Activation
    Eigen::MatrixXd d_ln(n, d_out);
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t d = 0; d < d_out; ++d) {
        d_ln(i, d) = g(i, d) * leaky_grad(ls.ln_out(i, d), config.leaky_slope);
      }
    }

    // LayerNorm (biased variance)
    Eigen::MatrixXd d_pre(n, d_out);
    for (std::uint32_t i = 0; i < n; ++i) {
      const Eigen::RowVectorXd dy = d_ln.row(i);
      lg.gamma += dy.cwiseProduct(ls.xhat.row(i)).transpose();
      lg.beta += dy.transpose();
      const Eigen::RowVectorXd dxhat = dy.cwiseProduct(layer.gamma.transpose());
      const double mean_dxhat = dxhat.mean();
      const double mean_dxhat_xhat = dxhat.cwiseProduct(ls.xhat.row(i)).mean();
      d_pre.row(i) = ls.inv_std(i) *
                     (dxhat.array() - mean_dxhat -
                      ls.xhat.row(i).array() * mean_dxhat_xhat);
    }

    // Skip projection
    lg.skip += d_pre.transpose() * ls.input;
    Eigen::MatrixXd d_input = d_pre * layer.skip;

    for (std::uint32_t h = 0; h < config.num_heads; ++h) {
      const HeadState& hs = ls.heads[h];
      const Eigen::VectorXd a_src = layer.head_attn[h].head(d_head);
      const Eigen::VectorXd a_dst = layer.head_attn[h].tail(d_head);

      Eigen::MatrixXd d_m(n, d_head);
      if (average) {
        d_m = d_pre / static_cast<double>(config.num_heads);
      } else {
        d_m = d_pre.middleCols(h * d_head, d_head);
      }

      Eigen::MatrixXd d_z = Eigen::MatrixXd::Zero(n, d_head);
      Eigen::VectorXd d_s = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd d_t = Eigen::VectorXd::Zero(n);

      std::vector<double> d_alpha_eff(graph.num_attn_entries());
      for (std::uint32_t i = 0; i < n; ++i) {
        const std::size_t lo = offsets[i];
        const std::size_t hi = offsets[i + 1];
        const std::uint32_t* nbr = graph.adj_begin(i);
        // Aggregation: m_i = sum_j alpha_eff * z_j
        for (std::size_t k = lo; k < hi; ++k) {
          const std::uint32_t j = k + 1 == hi ? i : nbr[k - lo];
          d_alpha_eff[k] = d_m.row(i).dot(hs.z.row(j));
          d_z.row(j) += hs.alpha_eff[k] * d_m.row(i);
        }

        // Dropout renormalization, then softmax, then the logit LeakyReLU.
        double dot_eff = 0.0;
        if (use_dropout && !hs.renorm_fallback[i]) {
          for (std::size_t k = lo; k < hi; ++k) {
            dot_eff += d_alpha_eff[k] * hs.alpha_eff[k];
          }
        }
        double dot_alpha = 0.0;
        std::size_t kbase = lo;
        std::vector<double> d_alpha(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) {
          double da;
          if (use_dropout && !hs.renorm_fallback[i]) {
            da = hs.keep_mask[k]
                     ? (d_alpha_eff[k] - dot_eff) / hs.renorm_sum[i]
                     : 0.0;
          } else {
            da = d_alpha_eff[k];
          }
          d_alpha[k - kbase] = da;
          dot_alpha += da * hs.alpha[k];
        }
        for (std::size_t k = lo; k < hi; ++k) {
          const std::uint32_t j = k + 1 == hi ? i : nbr[k - lo];
          const double d_e = hs.alpha[k] * (d_alpha[k - kbase] - dot_alpha);
          const double d_e_pre =
              d_e * leaky_grad(hs.e_pre[k], config.attn_slope);
          d_s(i) += d_e_pre;
          d_t(j) += d_e_pre;
        }
      }

      // s = Z a_src, t = Z a_dst
      lg.head_attn[h].head(d_head) += hs.z.transpose() * d_s;
      lg.head_attn[h].tail(d_head) += hs.z.transpose() * d_t;
      d_z += d_s * a_src.transpose();
      d_z += d_t * a_dst.transpose();

      // z = X W^T
      lg.head_weight[h] += d_z.transpose() * ls.input;
      d_input += d_z * layer.head_weight[h];
    }

    g = std::move(d_input);
  }

  if (want_feature_grad) grads.features = std::move(g);
  return grads;
}

bool TrainedModel::has_user(Id user) const {
  return std::binary_search(user_ids.begin(), user_ids.end(), user);
}

double TrainedModel::score_ids(Id user, Id item) const {
  const auto u = std::lower_bound(user_ids.begin(), user_ids.end(), user);
  if (u == user_ids.end() || *u != user) {
    throw ValidationError("unknown user " + std::to_string(user));
  }
  const auto i = std::lower_bound(item_ids.begin(), item_ids.end(), item);
  if (i == item_ids.end() || *i != item) {
    throw ValidationError("unknown item " + std::to_string(item));
  }
  return user_embeddings.row(u - user_ids.begin())
      .dot(item_embeddings.row(i - item_ids.begin()));
}

namespace {

constexpr char kCheckpointMagic[4] = {'G', 'A', 'T', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_matrix_f32(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      binio::write_f32(out, static_cast<float>(m(r, c)));
    }
  }
}

void read_matrix_f32(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = static_cast<double>(binio::read_f32(in));
    }
  }
}

void write_vector_f32(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    binio::write_f32(out, static_cast<float>(v(i)));
  }
}

void read_vector_f32(std::istream& in, Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = static_cast<double>(binio::read_f32(in));
  }
}

}  // namespace

void TrainedModel::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + file.string());
  out.write(kCheckpointMagic, 4);
  binio::write_u32(out, kCheckpointVersion);
  binio::write_u64(out, meta.seed);
  const ModelConfig& c = params.config;
  binio::write_u32(out, c.input_dim);
  binio::write_u32(out, c.hidden_dim);
  binio::write_u32(out, c.output_dim);
  binio::write_u32(out, c.num_heads);
  binio::write_u32(out, c.num_layers);
  binio::write_f64(out, c.dropout);
  binio::write_f64(out, c.leaky_slope);
  binio::write_f64(out, c.attn_slope);
  binio::write_f64(out, c.layer_norm_eps);
  binio::write_u64(out, user_ids.size());
  binio::write_u64(out, item_ids.size());
  for (const Id id : user_ids) binio::write_u64(out, id);
  for (const Id id : item_ids) binio::write_u64(out, id);
  binio::write_u32(out, meta.epochs_run);
  binio::write_f64(out, meta.final_train_loss);
  binio::write_f64(out, meta.final_val_loss);
  binio::write_f64(out, meta.best_val_loss);
  for (const LayerParams& layer : params.layers) {
    for (const auto& w : layer.head_weight) write_matrix_f32(out, w);
    for (const auto& a : layer.head_attn) write_vector_f32(out, a);
    write_matrix_f32(out, layer.skip);
    write_vector_f32(out, layer.gamma);
    write_vector_f32(out, layer.beta);
  }
  write_matrix_f32(out, user_embeddings);
  write_matrix_f32(out, item_embeddings);
  if (!out) throw Error("short write to checkpoint " + file.string());
}

TrainedModel TrainedModel::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw ParseError("bad checkpoint magic", 0);
  }
  const std::uint32_t version = binio::read_u32(in);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version", 0);
  }
  TrainedModel model;
  model.meta.seed = binio::read_u64(in);
  ModelConfig c;
  c.input_dim = binio::read_u32(in);
  c.hidden_dim = binio::read_u32(in);
  c.output_dim = binio::read_u32(in);
  c.num_heads = binio::read_u32(in);
  c.num_layers = binio::read_u32(in);
  c.dropout = binio::read_f64(in);
  c.leaky_slope = binio::read_f64(in);
  c.attn_slope = binio::read_f64(in);
  c.layer_norm_eps = binio::read_f64(in);
  model.params.config = c;
  const std::uint64_t num_users = binio::read_u64(in);
  const std::uint64_t num_items = binio::read_u64(in);
  model.user_ids.resize(num_users);
  model.item_ids.resize(num_items);
  for (auto& id : model.user_ids) id = static_cast<Id>(binio::read_u64(in));
  for (auto& id : model.item_ids) id = static_cast<Id>(binio::read_u64(in));
  model.meta.epochs_run = binio::read_u32(in);
  model.meta.final_train_loss = binio::read_f64(in);
  model.meta.final_val_loss = binio::read_f64(in);
  model.meta.best_val_loss = binio::read_f64(in);
  for (std::uint32_t l = 0; l < c.num_layers; ++l) {
    const std::uint32_t d_in = c.layer_in_dim(l);
    const std::uint32_t d_out = c.layer_out_dim(l);
    const std::uint32_t d_head = c.layer_head_dim(l);
    LayerParams layer;
    for (std::uint32_t h = 0; h < c.num_heads; ++h) {
      Eigen::MatrixXd w(d_head, d_in);
      read_matrix_f32(in, w);
      layer.head_weight.push_back(std::move(w));
    }
    for (std::uint32_t h = 0; h < c.num_heads; ++h) {
      Eigen::VectorXd a(2 * d_head);
      read_vector_f32(in, a);
      layer.head_attn.push_back(std::move(a));
    }
    layer.skip = Eigen::MatrixXd(d_out, d_in);
    read_matrix_f32(in, layer.skip);
    layer.gamma = Eigen::VectorXd(d_out);
    read_vector_f32(in, layer.gamma);
    layer.beta = Eigen::VectorXd(d_out);
    read_vector_f32(in, layer.beta);
    model.params.layers.push_back(std::move(layer));
  }
  model.user_embeddings = Eigen::MatrixXd(num_users, c.output_dim);
  read_matrix_f32(in, model.user_embeddings);
  model.item_embeddings = Eigen::MatrixXd(num_items, c.output_dim);
  read_matrix_f32(in, model.item_embeddings);
  if (!in) throw ParseError("truncated checkpoint", 0);
  return model;
}

}  // namespace gatrec
