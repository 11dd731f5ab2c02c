#pragma once

#include <cstdint>
#include <vector>

namespace qsrf {

/// One candidate in a per-user ranking. Lists are ordered by descending
/// score with ties broken by ascending item id.
struct ScoredItem {
  double score = 0.0;
  std::int64_t item = 0;
  bool relevant = false;
};

/// DCG@k / IDCG@k with unit gains and 1/log2(pos+1) discounts, positions
/// 1-based. Returns 0 when the list holds no relevant item; an empty list
/// warns and returns 0.
double ndcg_at_k(std::vector<ScoredItem> items, int k);

struct MacroStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  std::int64_t users = 0;  // users with at least one relevant item
};

struct MacroMicroNdcg {
  MacroStats macro;
  double micro = 0.0;
};

/// Macro: mean/median/std of per-user nDCG@k over users with >= 1 relevant
/// item. Micro: nDCG@k of the single pooled list of every (user, item)
/// score; pooled ties order by (user index, item id).
MacroMicroNdcg macro_micro_ndcg(
    const std::vector<std::vector<ScoredItem>>& per_user, int k);

/// Probability that a random positive outscores a random negative, ties
/// counted 1/2. Throws when only one class is present.
double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels);

/// -mean(y ln p + (1-y) ln(1-p)) with probabilities clipped to
/// [1e-12, 1 - 1e-12].
double log_loss(const std::vector<double>& probs,
                const std::vector<int>& labels);

}  // namespace qsrf
