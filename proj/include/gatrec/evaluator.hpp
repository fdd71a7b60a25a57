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

#ifndef GATREC_EVALUATOR_HPP_
#define GATREC_EVALUATOR_HPP_

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gatrec/model.hpp"
#include "gatrec/types.hpp"

namespace gatrec {

struct EvalConfig {
  std::vector<int> k_values{5, 10, 20};  // sorted ascending
  int relevance_threshold = 4;           // rating >= 4 is relevant
  int cold_start_max = 5;                // strict less-than
  int folds = 5;
  std::uint64_t split_seed = 42;

  void validate() const;
};

/// Seeded shuffle, then `folds` near-equal partitions (sizes differ by at
/// most 1). Fold k's test set is fold k; its train set is everything else.
std::vector<std::pair<std::vector<Interaction>, std::vector<Interaction>>>
kfold_split(const std::vector<Interaction>& interactions, int folds,
            std::uint64_t seed);

/// Candidates sorted by model score descending, ties by ascending item id.
std::vector<Id> rank_test_items(const TrainedModel& model, Id user,
                                std::vector<Id> candidates);

struct MetricsAtK {
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  double ap = 0.0;
};

/// Binary-relevance metrics at cutoff k over a ranked candidate list.
/// `relevant` must be sorted ascending and nonempty. With
/// k' = min(k, |ranked|): precision = hits/k', recall = hits/|relevant|,
/// DCG = sum rel_r / log2(r+1) for r <= k' with IDCG over
/// min(k', |relevant|) ideal ones, ap = (sum of precision@r at hit ranks)
/// / min(k, |relevant|).
MetricsAtK metrics_at_k(const std::vector<Id>& ranked,
                        const std::vector<Id>& relevant, int k);

/// Fraction of the catalog appearing in at least one top-K list.
double item_coverage(const std::vector<std::vector<Id>>& topk_lists,
                     std::size_t catalog_size);

enum class EvalSlice { All, ColdStart };

struct KMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  double map = 0.0;
  double coverage = 0.0;
};

/// Metric means over evaluated users. Users with zero relevant test items
/// are excluded from the means and the user count; per_k is empty when no
/// user was evaluable (metrics absent, not zero).
struct SliceReport {
  std::string slice;
  std::size_t users_evaluated = 0;
  std::map<int, KMetrics> per_k;
};

/// Ranking callback for baseline rankers: given a user and candidate items,
/// return them in ranked order.
using RankFn = std::function<std::vector<Id>(Id, std::vector<Id>)>;

/// Protocol core: per user, candidates are the user's explicitly rated test
/// items (all ratings); relevant are those rated >= threshold. The
/// cold-start slice keeps users with fewer than cold_start_max training
/// interactions after rating-3 filtering. Coverage is computed per K over
/// evaluated users' top-K lists against `catalog_size`.
SliceReport evaluate_with_ranker(const RankFn& rank,
                                 const std::vector<Interaction>& test,
                                 const std::vector<Interaction>& train,
                                 const EvalConfig& config, EvalSlice slice,
                                 std::size_t catalog_size);

SliceReport evaluate(const TrainedModel& model,
                     const std::vector<Interaction>& test,
                     const std::vector<Interaction>& train,
                     const EvalConfig& config, EvalSlice slice);

/// Ranks by global positive-interaction count in the training split, ties
/// by ascending item id. The non-personalized baseline.
class PopularityRanker {
 public:
  PopularityRanker(const std::vector<Interaction>& train,
                   int relevance_threshold = 4);
  std::vector<Id> rank(std::vector<Id> candidates) const;

 private:
  std::map<Id, int> counts_;
};

/// Key-value text block per (slice, k); absent metrics print as NA.
void write_report_text(std::ostream& out, const std::string& fold_label,
                       const std::vector<SliceReport>& reports);

/// One TSV row per (fold, slice, k):
/// `fold<TAB>slice<TAB>k<TAB>precision<TAB>recall<TAB>ndcg<TAB>map<TAB>coverage<TAB>users`.
void append_metrics_tsv(std::ostream& out, const std::string& fold_label,
                        const std::vector<SliceReport>& reports);

/// Per-slice, per-k means over folds that had evaluable users;
/// users_evaluated is summed.
std::vector<SliceReport> mean_reports(
    const std::vector<std::vector<SliceReport>>& fold_reports);

}  // namespace gatrec

#endif  // GATREC_EVALUATOR_HPP_
