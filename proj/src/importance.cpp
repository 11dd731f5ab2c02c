#include "qsrf/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "qsrf/parallel.hpp"
#include "qsrf/rng.hpp"

namespace qsrf {
namespace {

// nDCG@k over a candidate pool, scores descending with ties broken by
// ascending item id. `order` is scratch space.
double pool_ndcg(const std::vector<double>& scores,
                 const std::vector<std::int32_t>& items,
                 const std::vector<char>& relevant, int k,
                 std::vector<std::int32_t>& order) {
  const std::size_t n = scores.size();
  order.resize(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    return items[static_cast<std::size_t>(a)] < items[static_cast<std::size_t>(b)];
  });

  std::size_t n_relevant = 0;
  for (char r : relevant) n_relevant += r ? 1 : 0;
  if (n_relevant == 0) return 0.0;

  double dcg = 0.0;
  const std::size_t cutoff = std::min<std::size_t>(n, static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < cutoff; ++pos)
    if (relevant[static_cast<std::size_t>(order[pos])])
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(n_relevant,
                                                  static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < ideal; ++pos)
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  return dcg / idcg;
}

}  // namespace

double base_score(const Eigen::Ref<const Vector>& user_profile,
                  const Eigen::Ref<const Vector>& item_code,
                  Index masked_atom) {
  if (user_profile.size() != item_code.size())
    throw std::invalid_argument("base_score: dimension mismatch");
  double dot = user_profile.dot(item_code);
  if (masked_atom >= 0 && masked_atom < user_profile.size())
    dot -= user_profile[masked_atom] * item_code[masked_atom];
  return dot;
}

AtomWeights delta_ndcg_weights(const SparseMatrix& item_codes,
                               const InteractionLog& log,
                               const SplitPart<SplitRole::Train>& train,
                               const SplitPart<SplitRole::Valid>& valid,
                               const ImportanceOptions& options,
                               std::uint64_t seed) {
  const Index n_atoms = item_codes.cols();
  if (item_codes.rows() != log.n_items)
    throw std::invalid_argument("delta_ndcg_weights: codes must cover all items");

  AtomWeights result;
  result.bootstrap_fraction = options.bootstrap_fraction;
  result.weights = Vector::Zero(n_atoms);

  // Seeded subsample of the training rows; its distinct users are evaluated.
  std::vector<std::int32_t> rows = train.rows;
  {
    auto rng = make_rng(derive_seed(seed, stream::kImportance));
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto keep = static_cast<std::size_t>(
        options.bootstrap_fraction * static_cast<double>(rows.size()));
    rows.resize(std::min(rows.size(), std::max<std::size_t>(keep, 1)));
  }
  result.bootstrap_rows = rows;

  std::vector<char> in_bootstrap(static_cast<std::size_t>(log.n_users), 0);
  for (std::int32_t r : rows)
    in_bootstrap[static_cast<std::size_t>(
        log.entries[static_cast<std::size_t>(r)].user)] = 1;
  std::vector<std::int32_t> users;
  for (std::int32_t u = 0; u < log.n_users; ++u)
    if (in_bootstrap[static_cast<std::size_t>(u)]) users.push_back(u);

  auto train_items = items_by_user(log, train);
  auto valid_items = items_by_user(log, valid);

  // Items the user interacted with in train or valid; negatives avoid them.
  std::vector<std::vector<std::int32_t>> known(static_cast<std::size_t>(log.n_users));
  for (std::int32_t u : users) {
    auto& k = known[static_cast<std::size_t>(u)];
    k = train_items[static_cast<std::size_t>(u)];
    k.insert(k.end(), valid_items[static_cast<std::size_t>(u)].begin(),
             valid_items[static_cast<std::size_t>(u)].end());
    std::sort(k.begin(), k.end());
  }

  const Index n_users = static_cast<Index>(users.size());
  const Index chunk = 8;
  const Index n_chunks = (n_users + chunk - 1) / chunk;
  std::vector<Vector> partial(static_cast<std::size_t>(n_chunks),
                              Vector::Zero(n_atoms));
  std::vector<std::int64_t> evaluated(static_cast<std::size_t>(n_chunks), 0);

  parallel_chunks(n_users, chunk, options.threads, [&](Index begin, Index end) {
    const auto chunk_id = static_cast<std::size_t>(begin / chunk);
    Vector& acc = partial[chunk_id];
    std::vector<double> scores, masked;
    std::vector<std::int32_t> pool_items, order;
    std::vector<char> relevant;

    for (Index ui = begin; ui < end; ++ui) {
      const std::int32_t u = users[static_cast<std::size_t>(ui)];
      const auto& relevant_items = valid_items[static_cast<std::size_t>(u)];
      if (relevant_items.empty()) continue;  // no validation relevance
      const auto& profile_items = train_items[static_cast<std::size_t>(u)];
      if (profile_items.empty()) continue;

      Vector profile = Vector::Zero(n_atoms);
      for (std::int32_t item : profile_items)
        for (SparseMatrix::InnerIterator it(item_codes, item); it; ++it)
          profile[it.col()] += it.value();

      // Candidate pool: validation relevants, the hardest unclicked items
      // under this user's profile, and uniform negatives.
      pool_items.assign(relevant_items.begin(), relevant_items.end());
      relevant.assign(pool_items.size(), 1);
      const auto& avoid = known[static_cast<std::size_t>(u)];
      const int n_hard = static_cast<int>(options.hard_negative_fraction *
                                          options.pool_negatives);
      if (n_hard > 0) {
        std::vector<std::pair<double, std::int32_t>> scored;
        scored.reserve(static_cast<std::size_t>(log.n_items));
        for (std::int32_t item = 0; item < log.n_items; ++item) {
          if (std::binary_search(avoid.begin(), avoid.end(), item)) continue;
          double s = 0.0;
          for (SparseMatrix::InnerIterator it(item_codes, item); it; ++it)
            s += profile[it.col()] * it.value();
          if (s > 0.0) scored.push_back({s, item});
        }
        const auto take = std::min<std::size_t>(scored.size(),
                                                static_cast<std::size_t>(n_hard));
        std::partial_sort(scored.begin(),
                          scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), [](const auto& a, const auto& b) {
                            if (a.first != b.first) return a.first > b.first;
                            return a.second < b.second;
                          });
        for (std::size_t h = 0; h < take; ++h) {
          pool_items.push_back(scored[h].second);
          relevant.push_back(0);
        }
      }
      std::vector<std::int32_t> avoid_plus = avoid;
      for (std::size_t p = relevant_items.size(); p < pool_items.size(); ++p)
        avoid_plus.push_back(pool_items[p]);
      std::sort(avoid_plus.begin(), avoid_plus.end());
      for (std::int32_t item : sample_unclicked(
               log.n_items, avoid_plus, options.pool_negatives - n_hard,
               derive_seed(seed, stream::kNegatives,
                           static_cast<std::uint64_t>(u)))) {
        pool_items.push_back(item);
        relevant.push_back(0);
      }

      const std::size_t pool_size = pool_items.size();
      scores.assign(pool_size, 0.0);
      // atom -> (pool position, score contribution) pairs, for ablations
      std::unordered_map<std::int32_t,
                         std::vector<std::pair<std::int32_t, double>>>
          touched;
      for (std::size_t p = 0; p < pool_size; ++p) {
        for (SparseMatrix::InnerIterator it(item_codes, pool_items[p]); it;
             ++it) {
          const double contribution = profile[it.col()] * it.value();
          if (contribution == 0.0) continue;
          scores[p] += contribution;
          touched[static_cast<std::int32_t>(it.col())].emplace_back(
              static_cast<std::int32_t>(p), contribution);
        }
      }

      const double full = pool_ndcg(scores, pool_items, relevant,
                                    options.k_cutoff, order);
      for (const auto& [atom, hits] : touched) {
        masked = scores;
        for (const auto& [pos, contribution] : hits)
          masked[static_cast<std::size_t>(pos)] -= contribution;
        const double without = pool_ndcg(masked, pool_items, relevant,
                                         options.k_cutoff, order);
        acc[atom] += full - without;
      }
      ++evaluated[chunk_id];
    }
  });

  std::int64_t total_users = 0;
  for (std::size_t c = 0; c < partial.size(); ++c) {
    result.weights += partial[c];
    total_users += evaluated[c];
  }
  if (total_users > 0) result.weights /= static_cast<double>(total_users);
  return result;
}

std::vector<std::int32_t> sample_unclicked(
    std::int32_t n_items, const std::vector<std::int32_t>& avoid_sorted,
    int want, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_int_distribution<std::int32_t> item_dist(0, n_items - 1);
  const int reachable =
      n_items - static_cast<int>(avoid_sorted.size());
  const int target = std::min(want, std::max(reachable, 0));
  std::unordered_set<std::int32_t> drawn;
  int guard = 50 * target + 100;
  while (static_cast<int>(drawn.size()) < target && guard-- > 0) {
    const std::int32_t cand = item_dist(rng);
    if (std::binary_search(avoid_sorted.begin(), avoid_sorted.end(), cand))
      continue;
    drawn.insert(cand);
  }
  std::vector<std::int32_t> out(drawn.begin(), drawn.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::int32_t> select_candidates(
    const Eigen::Ref<const Vector>& weights, int k_top) {
  const Index n = weights.size();
  if (k_top < 0 || static_cast<Index>(k_top) > n)
    throw std::invalid_argument("select_candidates: k_top outside [0, atoms]");
  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) {
                     return weights[a] > weights[b];
                   });
  order.resize(static_cast<std::size_t>(k_top));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace qsrf
