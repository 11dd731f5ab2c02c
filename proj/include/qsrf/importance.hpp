#pragma once

#include <cstdint>
#include <vector>

#include "qsrf/corpus.hpp"
#include "qsrf/types.hpp"

namespace qsrf {

/// Performance-driven atom weights: mean per-user drop in nDCG@k when one
/// atom's coordinate is zeroed out of every code.
struct AtomWeights {
  Vector weights;
  double bootstrap_fraction = 0.0;
  std::vector<std::int32_t> bootstrap_rows;  // sampled training interaction indices
};

struct ImportanceOptions {
  double bootstrap_fraction = 0.2;
  int k_cutoff = 10;
  int pool_negatives = 100;  // sampled unclicked items per evaluated user
  // Share of the negatives taken from the user's top-scoring unclicked
  // items (impression-style hard negatives) instead of uniformly; ranking
  // damage from an ablation only registers against competitive candidates.
  double hard_negative_fraction = 0.5;
  int threads = 1;
};

/// Content scorer used for the ablations: the dot product of an aggregated
/// user profile and an item code, with the masked coordinate zeroed in both.
double base_score(const Eigen::Ref<const Vector>& user_profile,
                  const Eigen::Ref<const Vector>& item_code,
                  Index masked_atom = -1);

/// For every atom j, averages ndcg@k(full) - ndcg@k(atom j zeroed) over the
/// distinct users of a seeded 20% subsample of the training rows. User
/// profiles aggregate the user's training-item codes; relevance comes from
/// the validation split; rankings run over the user's validation items plus
/// a mix of hard (top-scoring unclicked) and uniformly sampled negatives.
/// Users without validation relevance are skipped. Deterministic per seed.
AtomWeights delta_ndcg_weights(const SparseMatrix& item_codes,
                               const InteractionLog& log,
                               const SplitPart<SplitRole::Train>& train,
                               const SplitPart<SplitRole::Valid>& valid,
                               const ImportanceOptions& options,
                               std::uint64_t seed);

/// Indices of the k_top largest weights, ties to the lower index, returned
/// in ascending index order.
std::vector<std::int32_t> select_candidates(
    const Eigen::Ref<const Vector>& weights, int k_top);

/// Up to `want` distinct uniform item draws avoiding the sorted `avoid`
/// list; returned ascending. Deterministic per seed.
std::vector<std::int32_t> sample_unclicked(
    std::int32_t n_items, const std::vector<std::int32_t>& avoid_sorted,
    int want, std::uint64_t seed);

}  // namespace qsrf
