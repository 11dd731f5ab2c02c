#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qsrf/metrics.hpp"

using namespace qsrf;

TEST_CASE("ndcg: perfect and empty-relevance rankings") {
  std::vector<ScoredItem> perfect{{0.9, 0, true}, {0.8, 1, true}, {0.1, 2, false}};
  CHECK(ndcg_at_k(perfect, 2) == doctest::Approx(1.0));
  std::vector<ScoredItem> none{{0.9, 0, false}, {0.8, 1, false}};
  CHECK(ndcg_at_k(none, 2) == 0.0);
}

TEST_CASE("ndcg: relevant at ranks 1 and 3 of 3 with k=3") {
  std::vector<ScoredItem> items{{3.0, 0, true}, {2.0, 1, false}, {1.0, 2, true}};
  const double expected =
      (1.0 + 1.0 / std::log2(4.0)) / (1.0 + 1.0 / std::log2(3.0));
  CHECK(ndcg_at_k(items, 3) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.9197).epsilon(1e-4));
}

TEST_CASE("ndcg ties break by ascending item id") {
  // Both items score the same; the relevant one has the larger id, so it
  // lands at rank 2.
  std::vector<ScoredItem> items{{1.0, 5, true}, {1.0, 2, false}};
  CHECK(ndcg_at_k(items, 1) == 0.0);
  std::vector<ScoredItem> swapped{{1.0, 1, true}, {1.0, 2, false}};
  CHECK(ndcg_at_k(swapped, 1) == doctest::Approx(1.0));
}

TEST_CASE("ndcg is invariant under strictly monotone score transforms") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredItem> items, transformed;
    for (int i = 0; i < 12; ++i) {
      const double s = unit(rng);
      const bool rel = unit(rng) < 0.3;
      items.push_back({s, i, rel});
      transformed.push_back({std::exp(3.0 * s) + 1.0, i, rel});
    }
    CHECK(ndcg_at_k(items, 5) ==
          doctest::Approx(ndcg_at_k(transformed, 5)).epsilon(1e-12));
  }
}

TEST_CASE("macro/micro: single-user degeneracy and two-user average") {
  std::vector<std::vector<ScoredItem>> one_user{
      {{0.9, 0, true}, {0.5, 1, false}, {0.2, 2, true}}};
  const MacroMicroNdcg single = macro_micro_ndcg(one_user, 10);
  CHECK(single.macro.mean == doctest::Approx(single.micro).epsilon(1e-12));
  CHECK(single.macro.users == 1);

  std::vector<std::vector<ScoredItem>> two_users{
      {{0.9, 0, true}, {0.5, 1, false}},   // relevant on top: ndcg 1
      {{0.9, 0, false}, {0.5, 1, true}}};  // relevant at rank 2 with k=1
  const MacroMicroNdcg pair = macro_micro_ndcg(two_users, 1);
  CHECK(pair.macro.mean == doctest::Approx(0.5));
}

TEST_CASE("macro excludes users without relevant items") {
  std::vector<std::vector<ScoredItem>> users{
      {{0.9, 0, true}},
      {{0.9, 0, false}, {0.1, 1, false}}};
  const MacroMicroNdcg result = macro_micro_ndcg(users, 10);
  CHECK(result.macro.users == 1);
  CHECK(result.macro.mean == doctest::Approx(1.0));
}

TEST_CASE("macro mean lies between the per-user extremes") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<ScoredItem>> users;
  std::vector<double> individual;
  for (int u = 0; u < 9; ++u) {
    std::vector<ScoredItem> items;
    for (int i = 0; i < 8; ++i)
      items.push_back({unit(rng), i, unit(rng) < 0.4});
    bool any = false;
    for (const auto& it : items) any |= it.relevant;
    if (!any) items[0].relevant = true;
    individual.push_back(ndcg_at_k(items, 5));
    users.push_back(std::move(items));
  }
  const MacroMicroNdcg result = macro_micro_ndcg(users, 5);
  const auto [lo, hi] = std::minmax_element(individual.begin(), individual.end());
  CHECK(result.macro.mean >= *lo - 1e-12);
  CHECK(result.macro.mean <= *hi + 1e-12);
}

TEST_CASE("roc_auc: separation, ties, and the 4-point oracle case") {
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
  CHECK(roc_auc({0.9, 0.8, 0.8, 0.1}, {1, 0, 1, 0}) ==
        doctest::Approx(0.875).epsilon(1e-12));
  CHECK_THROWS_AS(roc_auc({0.4, 0.6}, {1, 1}), std::invalid_argument);
}

TEST_CASE("roc_auc matches exhaustive pair counting on random cases") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores;
    std::vector<int> labels;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < 20; ++i) {
      // Low-resolution scores force plenty of ties.
      scores.push_back(std::round(unit(rng) * 8.0) / 8.0);
      labels.push_back(unit(rng) < 0.5 ? 1 : 0);
      (labels.back() ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[1] = 0;
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(oracle::pairwise_auc(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms") {
  std::vector<double> scores{0.1, 0.4, 0.4, 0.9, 0.3};
  std::vector<int> labels{0, 1, 0, 1, 0};
  std::vector<double> mapped;
  for (double s : scores) mapped.push_back(2.0 * s * s * s + 7.0);
  CHECK(roc_auc(scores, labels) == doctest::Approx(roc_auc(mapped, labels)));
}

TEST_CASE("log_loss: exact predictions, coin flips, and a hand case") {
  CHECK(log_loss({1.0, 0.0, 1.0}, {1, 0, 1}) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(log_loss({0.5, 0.5}, {1, 0}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const double expected =
      -(std::log(0.8) + std::log(1.0 - 0.3) + std::log(0.6)) / 3.0;
  CHECK(log_loss({0.8, 0.3, 0.6}, {1, 0, 1}) ==
        doctest::Approx(expected).epsilon(1e-12));
}
