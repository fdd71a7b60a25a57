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

#include "gatrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "gatrec/errors.hpp"
#include "gatrec/rng.hpp"

namespace gatrec {

namespace {

constexpr std::uint64_t kTagKfold = 0x5EED0010;

const char* slice_name(EvalSlice slice) {
  return slice == EvalSlice::All ? "all" : "cold_start";
}

std::string format_metric(double v, bool absent) {
  if (absent) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void EvalConfig::validate() const {
  if (k_values.empty()) throw ValidationError("k_values must be nonempty");
  for (const int k : k_values) {
    if (k <= 0) throw ValidationError("k values must be positive");
  }
  if (!std::is_sorted(k_values.begin(), k_values.end())) {
    throw ValidationError("k_values must be sorted ascending");
  }
  if (folds < 2) throw ValidationError("folds must be >= 2");
  if (cold_start_max < 1) throw ValidationError("cold_start_max must be >= 1");
}

std::vector<std::pair<std::vector<Interaction>, std::vector<Interaction>>>
kfold_split(const std::vector<Interaction>& interactions, int folds,
            std::uint64_t seed) {
  if (folds < 2) throw ValidationError("folds must be >= 2");
  const std::size_t n = interactions.size();
  if (n < static_cast<std::size_t>(folds)) {
    throw ValidationError("fewer interactions than folds");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(Rng::derive(seed, kTagKfold));
  rng.shuffle(order);

  std::vector<int> fold_of(n);
  std::size_t cursor = 0;
  const std::size_t base = n / folds;
  const std::size_t rem = n % folds;
  for (int f = 0; f < folds; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[order[cursor++]] = f;
  }

  std::vector<std::pair<std::vector<Interaction>, std::vector<Interaction>>>
      splits(folds);
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < folds; ++f) {
      auto& [train, test] = splits[f];
      if (fold_of[i] == f) {
        test.push_back(interactions[i]);
      } else {
        train.push_back(interactions[i]);
      }
    }
  }
  return splits;
}

std::vector<Id> rank_test_items(const TrainedModel& model, Id user,
                                std::vector<Id> candidates) {
  std::vector<std::pair<double, Id>> scored;
  scored.reserve(candidates.size());
  for (const Id item : candidates) {
    scored.emplace_back(model.score_ids(user, item), item);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<Id> out;
  out.reserve(scored.size());
  for (const auto& [s, item] : scored) out.push_back(item);
  return out;
}

MetricsAtK metrics_at_k(const std::vector<Id>& ranked,
                        const std::vector<Id>& relevant, int k) {
  if (k <= 0) throw ValidationError("k must be positive");
  if (relevant.empty()) {
    throw ValidationError("metrics_at_k requires a nonempty relevant set");
  }
  const std::size_t k_eff = std::min<std::size_t>(k, ranked.size());

  int hits = 0;
  double dcg = 0.0;
  double ap_sum = 0.0;
  for (std::size_t r = 0; r < k_eff; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      ap_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k_eff, relevant.size());
  for (std::size_t r = 0; r < ideal; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }

  MetricsAtK m;
  m.precision =
      k_eff == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(k_eff);
  m.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  m.ap = ap_sum / static_cast<double>(
                      std::min<std::size_t>(k, relevant.size()));
  return m;
}

double item_coverage(const std::vector<std::vector<Id>>& topk_lists,
                     std::size_t catalog_size) {
  if (catalog_size == 0) throw ValidationError("catalog_size must be >= 1");
  std::unordered_set<Id> seen;
  for (const auto& list : topk_lists) seen.insert(list.begin(), list.end());
  return static_cast<double>(seen.size()) / static_cast<double>(catalog_size);
}

SliceReport evaluate_with_ranker(const RankFn& rank,
                                 const std::vector<Interaction>& test,
                                 const std::vector<Interaction>& train,
                                 const EvalConfig& config, EvalSlice slice,
                                 std::size_t catalog_size) {
  config.validate();

  std::map<Id, std::vector<Interaction>> test_by_user;
  for (const Interaction& it : test) test_by_user[it.user_id].push_back(it);

  // Cold-start membership: training interactions after rating-3 removal.
  std::unordered_map<Id, int> train_counts;
  if (slice == EvalSlice::ColdStart) {
    for (const Interaction& it : train) {
      if (it.rating != 3) ++train_counts[it.user_id];
    }
  }

  SliceReport report;
  report.slice = slice_name(slice);
  std::map<int, KMetrics> sums;
  std::map<int, std::vector<std::vector<Id>>> topk_lists;
  for (const int k : config.k_values) {
    sums[k] = KMetrics{};
    topk_lists[k] = {};
  }

  for (const auto& [user, items] : test_by_user) {
    if (slice == EvalSlice::ColdStart) {
      const auto it = train_counts.find(user);
      const int count = it == train_counts.end() ? 0 : it->second;
      if (count >= config.cold_start_max) continue;
    }
    std::vector<Id> candidates;
    std::vector<Id> relevant;
    candidates.reserve(items.size());
    for (const Interaction& it : items) {
      candidates.push_back(it.item_id);
      if (it.rating >= config.relevance_threshold) relevant.push_back(it.item_id);
    }
    if (relevant.empty()) continue;
    std::sort(relevant.begin(), relevant.end());

    const std::vector<Id> ranked = rank(user, std::move(candidates));
    for (const int k : config.k_values) {
      const MetricsAtK m = metrics_at_k(ranked, relevant, k);
      KMetrics& s = sums[k];
      s.precision += m.precision;
      s.recall += m.recall;
      s.ndcg += m.ndcg;
      s.map += m.ap;
      const std::size_t k_eff = std::min<std::size_t>(k, ranked.size());
      topk_lists[k].emplace_back(ranked.begin(), ranked.begin() + k_eff);
    }
    ++report.users_evaluated;
  }

  if (report.users_evaluated == 0) return report;  // metrics absent
  const double inv = 1.0 / static_cast<double>(report.users_evaluated);
  for (const int k : config.k_values) {
    KMetrics m = sums[k];
    m.precision *= inv;
    m.recall *= inv;
    m.ndcg *= inv;
    m.map *= inv;
    m.coverage = item_coverage(topk_lists[k], catalog_size);
    report.per_k[k] = m;
  }
  return report;
}

SliceReport evaluate(const TrainedModel& model,
                     const std::vector<Interaction>& test,
                     const std::vector<Interaction>& train,
                     const EvalConfig& config, EvalSlice slice) {
  return evaluate_with_ranker(
      [&model](Id user, std::vector<Id> candidates) {
        return rank_test_items(model, user, std::move(candidates));
      },
      test, train, config, slice, model.item_ids.size());
}

PopularityRanker::PopularityRanker(const std::vector<Interaction>& train,
                                   int relevance_threshold) {
  for (const Interaction& it : train) {
    if (it.rating >= relevance_threshold) ++counts_[it.item_id];
  }
}

std::vector<Id> PopularityRanker::rank(std::vector<Id> candidates) const {
  std::sort(candidates.begin(), candidates.end(),
            [this](const Id a, const Id b) {
              const auto ca = counts_.find(a);
              const auto cb = counts_.find(b);
              const int na = ca == counts_.end() ? 0 : ca->second;
              const int nb = cb == counts_.end() ? 0 : cb->second;
              if (na != nb) return na > nb;
              return a < b;
            });
  return candidates;
}

void write_report_text(std::ostream& out, const std::string& fold_label,
                       const std::vector<SliceReport>& reports) {
  out << "fold: " << fold_label << '\n';
  for (const SliceReport& report : reports) {
    out << "slice: " << report.slice << '\n';
    out << "users_evaluated: " << report.users_evaluated << '\n';
    const bool absent = report.users_evaluated == 0;
    for (const auto& [k, m] : report.per_k) {
      out << "k: " << k << '\n';
      out << "precision: " << format_metric(m.precision, absent) << '\n';
      out << "recall: " << format_metric(m.recall, absent) << '\n';
      out << "ndcg: " << format_metric(m.ndcg, absent) << '\n';
      out << "map: " << format_metric(m.map, absent) << '\n';
      out << "item_coverage: " << format_metric(m.coverage, absent) << '\n';
    }
    if (absent) out << "metrics: NA\n";
  }
}

void append_metrics_tsv(std::ostream& out, const std::string& fold_label,
                        const std::vector<SliceReport>& reports) {
  for (const SliceReport& report : reports) {
    if (report.users_evaluated == 0) {
      out << fold_label << '\t' << report.slice << '\t' << "-"
          << "\tNA\tNA\tNA\tNA\tNA\t0\n";
      continue;
    }
    for (const auto& [k, m] : report.per_k) {
      out << fold_label << '\t' << report.slice << '\t' << k << '\t'
          << format_metric(m.precision, false) << '\t'
          << format_metric(m.recall, false) << '\t'
          << format_metric(m.ndcg, false) << '\t'
          << format_metric(m.map, false) << '\t'
          << format_metric(m.coverage, false) << '\t' << report.users_evaluated
          << '\n';
    }
  }
}

std::vector<SliceReport> mean_reports(
    const std::vector<std::vector<SliceReport>>& fold_reports) {
  // slice name -> (k -> (sums, fold count)); users summed across folds.
  std::map<std::string, SliceReport> acc;
  std::map<std::string, std::map<int, int>> fold_counts;
  for (const auto& fold : fold_reports) {
    for (const SliceReport& report : fold) {
      SliceReport& a = acc[report.slice];
      a.slice = report.slice;
      a.users_evaluated += report.users_evaluated;
      if (report.users_evaluated == 0) continue;
      for (const auto& [k, m] : report.per_k) {
        KMetrics& s = a.per_k[k];
        s.precision += m.precision;
        s.recall += m.recall;
        s.ndcg += m.ndcg;
        s.map += m.map;
        s.coverage += m.coverage;
        ++fold_counts[report.slice][k];
      }
    }
  }
  std::vector<SliceReport> out;
  for (auto& [name, report] : acc) {
    for (auto& [k, m] : report.per_k) {
      const double inv = 1.0 / fold_counts[name][k];
      m.precision *= inv;
      m.recall *= inv;
      m.ndcg *= inv;
      m.map *= inv;
      m.coverage *= inv;
    }
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace gatrec
