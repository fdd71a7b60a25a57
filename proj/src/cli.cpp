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

#include "gatrec/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gatrec/catalog.hpp"
#include "gatrec/dataset.hpp"
#include "gatrec/embedder.hpp"
#include "gatrec/errors.hpp"
#include "gatrec/evaluator.hpp"
#include "gatrec/graph.hpp"
#include "gatrec/profiler.hpp"
#include "gatrec/remote.hpp"
#include "gatrec/trainer.hpp"

namespace gatrec {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTmdbKeyEnv = "TMDB_API_KEY";
constexpr const char* kLlmKeyEnv = "LLM_API_KEY";
constexpr const char* kEmbedKeyEnv = "EMBED_API_KEY";

struct RunConfig {
  std::string data_path;
  std::string format = "ml100k";
  std::string items_path;
  std::string cache_dir = "cache";
  std::string out_dir = "out";
  bool offline = false;
  std::string profile_provider = "fallback";
  std::string embed_provider = "fallback";
  std::uint32_t dim = 384;
  std::vector<int> k_values{5, 10, 20};
  bool ablate = false;
  bool positive_only = false;
  int folds = 5;
  int max_concurrency = 4;
  std::string tmdb_url = "https://api.themoviedb.org";
  std::string llm_url;
  std::string llm_model = "gpt-4o-mini";
  std::string embed_url;
  std::string embed_model = "all-MiniLM-L6-v2";
  std::string prompt_template_path = "assets/profile_prompt.txt";
  std::string model_path;  // recommend; defaults to <out>/model.ckpt
  Id rec_user = 0;
  TrainConfig train;
};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

RatingsFormat parse_format(const std::string& s) {
  if (s == "ml100k") return RatingsFormat::ML100K;
  if (s == "ml1m") return RatingsFormat::ML1M;
  throw ConfigError("format must be ml100k or ml1m, got '" + s + "'");
}

void validate_config(const RunConfig& cfg, const std::string& subcommand) {
  std::vector<std::string> violations;
  if (cfg.data_path.empty()) {
    violations.push_back("--data is required");
  } else if (!fs::exists(cfg.data_path)) {
    violations.push_back("data file does not exist: " + cfg.data_path);
  }
  if (!cfg.items_path.empty() && !fs::exists(cfg.items_path)) {
    violations.push_back("items file does not exist: " + cfg.items_path);
  }
  if (cfg.format != "ml100k" && cfg.format != "ml1m") {
    violations.push_back("format must be ml100k or ml1m");
  }
  for (const auto* provider : {&cfg.profile_provider, &cfg.embed_provider}) {
    if (*provider != "remote" && *provider != "fallback") {
      violations.push_back("providers must be 'remote' or 'fallback'");
      break;
    }
  }
  if (cfg.offline) {
    if (cfg.profile_provider == "remote" || cfg.embed_provider == "remote") {
      violations.push_back("--offline forbids remote providers");
    }
  } else {
    const bool needs_catalog = subcommand == "ingest" ||
                               subcommand == "profile" || subcommand == "embed" ||
                               subcommand == "train" ||
                               subcommand == "evaluate" ||
                               subcommand == "pipeline";
    if (needs_catalog && env_or_empty(kTmdbKeyEnv).empty()) {
      violations.push_back(std::string("online catalog access requires ") +
                           kTmdbKeyEnv + " (or pass --offline)");
    }
  }
  if (cfg.profile_provider == "remote") {
    if (env_or_empty(kLlmKeyEnv).empty()) {
      violations.push_back(std::string("remote profile provider requires ") +
                           kLlmKeyEnv);
    }
    if (!fs::exists(cfg.prompt_template_path)) {
      violations.push_back("prompt template does not exist: " +
                           cfg.prompt_template_path);
    }
  }
  if (cfg.embed_provider == "remote" && env_or_empty(kEmbedKeyEnv).empty()) {
    violations.push_back(std::string("remote embed provider requires ") +
                         kEmbedKeyEnv);
  }
  if (cfg.dim < 1) violations.push_back("--dim must be >= 1");
  if (cfg.folds < 2) violations.push_back("--folds must be >= 2");
  if (subcommand == "recommend" && cfg.rec_user == 0) {
    violations.push_back("recommend requires --user");
  }
  try {
    TrainConfig check = cfg.train;
    check.model.input_dim = cfg.dim;
    check.validate();
  } catch (const ValidationError& e) {
    violations.push_back(e.what());
  }
  if (!violations.empty()) {
    std::string joined;
    for (const auto& v : violations) joined += "  - " + v + "\n";
    throw ConfigError("invalid configuration:\n" + joined);
  }
}

struct PipelineContext {
  RunConfig cfg;
  RatingsFormat fmt = RatingsFormat::ML100K;
  Dataset dataset;
  std::map<Id, UserProfile> profiles;
  EmbeddingTable table;
};

fs::path cache_path(const RunConfig& cfg, const char* name) {
  return fs::path(cfg.cache_dir) / name;
}

std::unique_ptr<CatalogClient> make_catalog_client(const RunConfig& cfg) {
  if (cfg.offline) return std::make_unique<NullCatalogClient>();
  HttpConfig http;
  http.base_url = cfg.tmdb_url;
  http.api_key = env_or_empty(kTmdbKeyEnv);
  return std::make_unique<HttpCatalogClient>(http);
}

void step_ingest(PipelineContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  ctx.fmt = parse_format(cfg.format);
  std::vector<Interaction> interactions =
      load_interactions_file(cfg.data_path, ctx.fmt);

  std::map<Id, std::string> titles;
  if (!cfg.items_path.empty()) {
    titles = load_item_titles_file(cfg.items_path, ctx.fmt);
  }

  std::vector<Id> ids;
  for (const Interaction& it : interactions) ids.push_back(it.item_id);
  for (const auto& [id, title] : titles) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  fs::create_directories(cfg.cache_dir);
  MetadataCache cache(cache_path(cfg, "metadata.tsv"));
  auto client = make_catalog_client(cfg);
  std::map<Id, ItemMeta> items =
      enrich_items(ids, titles, *client, cache, /*substitute_missing=*/true,
                   cfg.offline ? 1 : cfg.max_concurrency);
  cache.save();  // canonical sorted rewrite

  ctx.dataset = Dataset::build(std::move(interactions), std::move(items));
  std::cout << "ingest: " << ctx.dataset.interactions().size()
            << " interactions, " << ctx.dataset.num_users() << " users, "
            << ctx.dataset.num_items() << " items\n";
}

void step_profile(PipelineContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const fs::path path = cache_path(cfg, "profiles.tsv");
  if (fs::exists(path)) {
    std::map<Id, UserProfile> cached = load_profiles(path);
    bool complete = true;
    for (const Id u : ctx.dataset.user_ids()) {
      if (!cached.count(u)) { complete = false; break; }
    }
    if (complete) {
      ctx.profiles = std::move(cached);
      std::cout << "profile: " << ctx.profiles.size() << " profiles (cached)\n";
      return;
    }
  }

  std::unique_ptr<ProfileGenerator> generator;
  if (cfg.profile_provider == "remote" && !cfg.offline) {
    std::ifstream tpl(cfg.prompt_template_path);
    std::ostringstream buf;
    buf << tpl.rdbuf();
    HttpConfig http;
    http.base_url = cfg.llm_url;
    http.api_key = env_or_empty(kLlmKeyEnv);
    generator = std::make_unique<RemoteProfileGenerator>(http, cfg.llm_model,
                                                         buf.str());
  } else {
    generator = std::make_unique<FallbackProfileGenerator>();
  }
  ctx.profiles = build_profiles(ctx.dataset, *generator, cfg.max_concurrency);
  save_profiles(path, ctx.profiles);
  std::cout << "profile: " << ctx.profiles.size() << " profiles\n";
}

void step_embed(PipelineContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  std::unique_ptr<EmbeddingProvider> provider;
  if (cfg.embed_provider == "remote" && !cfg.offline) {
    HttpConfig http;
    http.base_url = cfg.embed_url;
    http.api_key = env_or_empty(kEmbedKeyEnv);
    provider = std::make_unique<RemoteEmbeddingProvider>(http, cfg.embed_model,
                                                         cfg.dim);
  } else {
    provider = std::make_unique<HashingEmbeddingProvider>(cfg.dim);
  }
  ctx.table = build_embedding_table(ctx.dataset, ctx.profiles, *provider,
                                    cache_path(cfg, "embeddings.bin"));
  std::cout << "embed: " << ctx.table.user_vectors.size() << " user + "
            << ctx.table.item_vectors.size() << " item vectors, dim "
            << ctx.table.dim << "\n";
}

TrainConfig make_train_config(const RunConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.model.input_dim = cfg.dim;
  if (cfg.ablate) {
    tc.init_mode = InitMode::RandomInit;
    tc.alpha = 0.0;
  }
  return tc;
}

BipartiteGraph build_fold_graph(const PipelineContext& ctx,
                                const std::vector<Interaction>& train_split) {
  NodeIndex index =
      NodeIndex::build(ctx.dataset.user_ids(), ctx.dataset.item_ids());
  GraphOptions options;
  options.positive_edges_only = ctx.cfg.positive_only;
  return BipartiteGraph::build(train_split, std::move(index), options);
}

void step_train_full(PipelineContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  fs::create_directories(cfg.out_dir);
  BipartiteGraph graph = build_fold_graph(ctx, ctx.dataset.interactions());
  std::vector<EpochLog> log;
  TrainConfig tc = make_train_config(cfg);
  TrainedModel model =
      train(graph, ctx.dataset.interactions(), tc, &ctx.table, &log);
  model.save(fs::path(cfg.out_dir) / "model.ckpt");
  write_training_log(fs::path(cfg.out_dir) / "train_log.tsv", log);
  std::cout << "train: " << model.meta.epochs_run << " epochs, final loss "
            << model.meta.final_train_loss << ", best val "
            << model.meta.best_val_loss << "\n";
}

void step_evaluate_cv(PipelineContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  fs::create_directories(cfg.out_dir);
  EvalConfig ec;
  ec.k_values = cfg.k_values;
  ec.folds = cfg.folds;
  ec.split_seed = cfg.train.seed;
  ec.validate();

  const auto splits =
      kfold_split(ctx.dataset.interactions(), cfg.folds, ec.split_seed);

  std::ofstream tsv(fs::path(cfg.out_dir) / "metrics.tsv",
                    std::ios::binary | std::ios::trunc);
  tsv << "fold\tslice\tk\tprecision\trecall\tndcg\tmap\tcoverage\tusers\n";

  std::vector<std::vector<SliceReport>> fold_reports;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const auto& [train_split, test_split] = splits[f];
    BipartiteGraph graph = build_fold_graph(ctx, train_split);
    TrainConfig tc = make_train_config(cfg);
    tc.seed = Rng::derive(cfg.train.seed, 0xF01D + f);
    std::vector<EpochLog> log;
    TrainedModel model = train(graph, train_split, tc, &ctx.table, &log);

    std::vector<SliceReport> reports;
    reports.push_back(evaluate(model, test_split, train_split, ec, EvalSlice::All));
    reports.push_back(
        evaluate(model, test_split, train_split, ec, EvalSlice::ColdStart));

    const std::string label = std::to_string(f);
    std::ofstream report_file(fs::path(cfg.out_dir) /
                              ("fold_" + label + ".report.txt"));
    write_report_text(report_file, label, reports);
    append_metrics_tsv(tsv, label, reports);
    model.save(fs::path(cfg.out_dir) / ("fold_" + label + ".ckpt"));
    write_training_log(
        fs::path(cfg.out_dir) / ("fold_" + label + "_train_log.tsv"), log);
    fold_reports.push_back(std::move(reports));
    std::cout << "fold " << f << ": trained " << model.meta.epochs_run
              << " epochs, evaluated\n";
  }

  const std::vector<SliceReport> mean = mean_reports(fold_reports);
  std::ofstream mean_file(fs::path(cfg.out_dir) / "mean.report.txt");
  write_report_text(mean_file, "mean", mean);
  append_metrics_tsv(tsv, "mean", mean);
  std::cout << "evaluate: " << splits.size() << " folds done, reports in "
            << cfg.out_dir << "\n";
}

void step_recommend(PipelineContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const fs::path model_path = cfg.model_path.empty()
                                  ? fs::path(cfg.out_dir) / "model.ckpt"
                                  : fs::path(cfg.model_path);
  if (!fs::exists(model_path)) {
    throw ConfigError("no checkpoint at " + model_path.string() +
                      " (run `train` first or pass --model)");
  }
  TrainedModel model = TrainedModel::load(model_path);
  if (!model.has_user(ctx.cfg.rec_user)) {
    throw ValidationError("unknown user " + std::to_string(cfg.rec_user));
  }

  // Candidates: full catalog minus the user's already-rated items.
  std::vector<Id> rated;
  for (const Interaction& it : ctx.dataset.interactions()) {
    if (it.user_id == cfg.rec_user) rated.push_back(it.item_id);
  }
  std::sort(rated.begin(), rated.end());
  std::vector<Id> candidates;
  for (const Id item : model.item_ids) {
    if (!std::binary_search(rated.begin(), rated.end(), item)) {
      candidates.push_back(item);
    }
  }
  const std::vector<Id> ranked =
      rank_test_items(model, cfg.rec_user, std::move(candidates));
  const int k = cfg.k_values.empty() ? 10 : cfg.k_values.front();
  const std::size_t limit = std::min<std::size_t>(k, ranked.size());
  char buf[64];
  for (std::size_t r = 0; r < limit; ++r) {
    std::snprintf(buf, sizeof buf, "%zu %u %.6f", r + 1, ranked[r],
                  model.score_ids(cfg.rec_user, ranked[r]));
    std::cout << buf << "\n";
  }
}

int dispatch(const std::string& subcommand, RunConfig cfg) {
  std::sort(cfg.k_values.begin(), cfg.k_values.end());
  cfg.k_values.erase(std::unique(cfg.k_values.begin(), cfg.k_values.end()),
                     cfg.k_values.end());
  validate_config(cfg, subcommand);

  PipelineContext ctx;
  ctx.cfg = std::move(cfg);

  step_ingest(ctx);
  if (subcommand == "ingest") return 0;

  if (subcommand == "recommend") {
    step_recommend(ctx);
    return 0;
  }

  step_profile(ctx);
  if (subcommand == "profile") return 0;

  step_embed(ctx);
  if (subcommand == "embed") return 0;

  if (subcommand == "train") {
    step_train_full(ctx);
    return 0;
  }
  if (subcommand == "evaluate" || subcommand == "pipeline") {
    step_evaluate_cv(ctx);
    return 0;
  }
  throw UsageError("unhandled subcommand " + subcommand);
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Graph-attention collaborative filtering engine"};
  app.require_subcommand(1);
  RunConfig cfg;

  app.set_config("--config", "", "Run configuration file");
  app.add_option("--data", cfg.data_path, "Ratings file");
  app.add_option("--format", cfg.format, "Dataset format: ml100k|ml1m");
  app.add_option("--items", cfg.items_path, "Item titles file");
  app.add_option("--cache-dir", cfg.cache_dir, "Cache directory");
  app.add_option("--out", cfg.out_dir, "Output directory");
  app.add_flag("--offline", cfg.offline, "Disable all network access");
  app.add_option("--profile-provider", cfg.profile_provider,
                 "remote|fallback");
  app.add_option("--embed-provider", cfg.embed_provider, "remote|fallback");
  app.add_option("--dim", cfg.dim, "Embedding dimension");
  app.add_option("--k", cfg.k_values, "Cutoffs, e.g. 5,10,20")
      ->delimiter(',');
  app.add_flag("--ablate", cfg.ablate,
               "Ablated configuration: random init, alpha=0");
  app.add_flag("--positive-only", cfg.positive_only,
               "Exclude negative edges from message passing");
  app.add_option("--folds", cfg.folds, "Cross-validation folds");
  app.add_option("--seed", cfg.train.seed, "Run seed");
  app.add_option("--alpha", cfg.train.alpha, "Cosine-alignment weight");
  app.add_option("--max-epochs", cfg.train.max_epochs, "Epoch budget");
  app.add_option("--batch-size", cfg.train.batch_size, "Positives per batch");
  app.add_option("--lr", cfg.train.lr_init, "Initial learning rate");
  app.add_option("--lr-factor", cfg.train.lr_factor, "Plateau decay factor");
  app.add_option("--lr-patience", cfg.train.lr_patience,
                 "Epochs before LR decay");
  app.add_option("--early-stop-patience", cfg.train.early_stop_patience,
                 "Epochs before early stop");
  app.add_option("--weight-decay", cfg.train.weight_decay, "AdamW decay");
  app.add_option("--val-fraction", cfg.train.val_fraction,
                 "Validation holdout fraction");
  app.add_option("--epsilon-neg", cfg.train.epsilon_neg,
                 "Explicit-negative sampling probability");
  app.add_option("--dropout", cfg.train.model.dropout,
                 "Attention dropout rate");
  app.add_flag("--train-features", cfg.train.train_features,
               "Unfreeze the initial node features");
  app.add_option("--max-concurrency", cfg.max_concurrency,
                 "Remote request concurrency cap");
  app.add_option("--tmdb-url", cfg.tmdb_url, "Catalog endpoint");
  app.add_option("--llm-url", cfg.llm_url, "Profile endpoint");
  app.add_option("--llm-model", cfg.llm_model, "Profile model name");
  app.add_option("--embed-url", cfg.embed_url, "Embedding endpoint");
  app.add_option("--embed-model", cfg.embed_model, "Embedding model name");
  app.add_option("--prompt-template", cfg.prompt_template_path,
                 "Profile prompt template");

  app.add_subcommand("ingest", "Parse ratings and resolve item metadata");
  app.add_subcommand("profile", "Generate user preference profiles");
  app.add_subcommand("embed", "Build the embedding table");
  app.add_subcommand("train", "Train one model on the full dataset");
  app.add_subcommand("evaluate", "Cross-validated training and ranking metrics");
  auto* rec = app.add_subcommand("recommend", "Top-K items for one user");
  rec->add_option("--user", cfg.rec_user, "User id");
  rec->add_option("--model", cfg.model_path, "Checkpoint path");
  app.add_subcommand("pipeline", "ingest -> profile -> embed -> evaluate");

  std::vector<const char*> argv;
  argv.push_back("gatrec");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    const std::string subcommand = app.get_subcommands().front()->get_name();
    return dispatch(subcommand, std::move(cfg));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args);
}

}  // namespace gatrec
