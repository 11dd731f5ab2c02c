#include "qsrf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qsrf {
namespace {

double discount(std::size_t position_1based) {
  return 1.0 / std::log2(static_cast<double>(position_1based) + 1.0);
}

void rank(std::vector<ScoredItem>& items) {
  std::sort(items.begin(), items.end(), [](const ScoredItem& a,
                                           const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
}

}  // namespace

double ndcg_at_k(std::vector<ScoredItem> items, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  if (items.empty()) {
    std::fprintf(stderr, "[metrics] ndcg_at_k on an empty ranking\n");
    return 0.0;
  }
  rank(items);

  std::size_t n_relevant = 0;
  for (const ScoredItem& it : items) n_relevant += it.relevant ? 1 : 0;
  if (n_relevant == 0) return 0.0;

  const std::size_t cutoff = std::min<std::size_t>(items.size(),
                                                   static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < cutoff; ++pos)
    if (items[pos].relevant) dcg += discount(pos + 1);

  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(n_relevant,
                                                  static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < ideal; ++pos) idcg += discount(pos + 1);
  return dcg / idcg;
}

MacroMicroNdcg macro_micro_ndcg(
    const std::vector<std::vector<ScoredItem>>& per_user, int k) {
  MacroMicroNdcg out;

  std::vector<double> scores;
  std::vector<ScoredItem> pooled;
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    bool any_relevant = false;
    for (const ScoredItem& it : per_user[u]) {
      any_relevant |= it.relevant;
      // Composite id keeps pooled ties ordered by (user, item).
      pooled.push_back({it.score,
                        static_cast<std::int64_t>(u) * (std::int64_t{1} << 32) +
                            it.item,
                        it.relevant});
    }
    if (any_relevant) scores.push_back(ndcg_at_k(per_user[u], k));
  }

  out.macro.users = static_cast<std::int64_t>(scores.size());
  if (!scores.empty()) {
    double sum = 0.0;
    for (double s : scores) sum += s;
    out.macro.mean = sum / static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - out.macro.mean) * (s - out.macro.mean);
    out.macro.stddev = std::sqrt(var / static_cast<double>(scores.size()));
    std::sort(scores.begin(), scores.end());
    const std::size_t mid = scores.size() / 2;
    out.macro.median = scores.size() % 2 == 1
                           ? scores[mid]
                           : 0.5 * (scores[mid - 1] + scores[mid]);
  }
  if (!pooled.empty()) out.micro = ndcg_at_k(std::move(pooled), k);
  return out;
}

double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("roc_auc: size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) (y != 0 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc: both classes must be present");

  // Mann-Whitney with midranks; identical to exhaustive pair counting with
  // ties worth 1/2.
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] != 0) rank_sum_pos += midrank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double log_loss(const std::vector<double>& probs,
                const std::vector<int>& labels) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("log_loss: size mismatch");
  if (probs.empty()) throw std::invalid_argument("log_loss: empty input");
  constexpr double kEps = 1e-12;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kEps, 1.0 - kEps);
    acc += labels[i] != 0 ? std::log(p) : std::log(1.0 - p);
  }
  return -acc / static_cast<double>(probs.size());
}

}  // namespace qsrf
