#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "qsrf/corpus.hpp"

using namespace qsrf;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load_interactions reads user-tab-item lines") {
  const auto path = write_temp("qsrf_inter_basic.tsv", "0\t0\n0\t1\n1\t0\n");
  const InteractionLog log = load_interactions(path);
  CHECK(log.entries.size() == 3);
  CHECK(log.n_users == 2);
  CHECK(log.n_items == 2);
  CHECK(log.entries[0] == Interaction{0, 0});
  CHECK(log.entries[2] == Interaction{1, 0});
}

TEST_CASE("load_interactions drops duplicate pairs") {
  const auto path = write_temp("qsrf_inter_dup.tsv", "0\t0\n0\t0\n");
  const InteractionLog log = load_interactions(path);
  CHECK(log.entries.size() == 1);
}

TEST_CASE("load_interactions header overrides inferred dimensions") {
  const auto path =
      write_temp("qsrf_inter_header.tsv", "#users=5 items=9\n0\t0\n1\t3\n");
  const InteractionLog log = load_interactions(path);
  CHECK(log.n_users == 5);
  CHECK(log.n_items == 9);
}

TEST_CASE("load_interactions rejects malformed and empty input") {
  const auto bad = write_temp("qsrf_inter_bad.tsv", "0\t1\nnot a line\n");
  CHECK_THROWS_WITH_AS(load_interactions(bad),
                       doctest::Contains(":2:"), std::runtime_error);
  const auto empty = write_temp("qsrf_inter_empty.tsv", "");
  CHECK_THROWS_AS(load_interactions(empty), std::runtime_error);
  const auto out_of_bounds =
      write_temp("qsrf_inter_oob.tsv", "#users=1 items=1\n0\t0\n3\t0\n");
  CHECK_THROWS_AS(load_interactions(out_of_bounds), std::runtime_error);
}

TEST_CASE("interaction round-trip reproduces the entry set") {
  InteractionLog log;
  log.n_users = 40;
  log.n_items = 60;
  std::mt19937_64 rng(7);
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < 300; ++i) {
    const int u = static_cast<int>(rng() % 40);
    const int it = static_cast<int>(rng() % 60);
    if (seen.insert({u, it}).second)
      log.entries.push_back({u, it});
  }
  const auto path = std::filesystem::temp_directory_path() / "qsrf_roundtrip.tsv";
  save_interactions(log, path.string());
  const InteractionLog reloaded = load_interactions(path.string());
  REQUIRE(reloaded.entries.size() == log.entries.size());
  CHECK(reloaded.n_users == log.n_users);
  CHECK(reloaded.n_items == log.n_items);
  for (std::size_t i = 0; i < log.entries.size(); ++i)
    CHECK(reloaded.entries[i] == log.entries[i]);
}

TEST_CASE("tag matrix COO round-trip") {
  SparseMatrix tags(3, 4);
  std::vector<Eigen::Triplet<double>> t{{0, 1, 1.0}, {2, 3, 1.0}, {1, 0, 2.5}};
  tags.setFromTriplets(t.begin(), t.end());
  const auto path = std::filesystem::temp_directory_path() / "qsrf_tags.tsv";
  save_tag_matrix(tags, path.string());
  const SparseMatrix reloaded = load_tag_matrix(path.string());
  CHECK(reloaded.rows() == 3);
  CHECK(reloaded.cols() == 4);
  CHECK(Matrix(reloaded) == Matrix(tags));
}

TEST_CASE("tfidf: single nonzero row normalizes to one") {
  SparseMatrix tags(1, 1);
  tags.insert(0, 0) = 1.0;
  const SparseMatrix out = tfidf(tags);
  CHECK(out.coeff(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("tfidf matches the closed-form evaluation on a 2x2 case") {
  SparseMatrix tags(2, 2);
  tags.insert(0, 0) = 1.0;
  tags.insert(0, 1) = 1.0;
  tags.insert(1, 0) = 1.0;
  const SparseMatrix out = tfidf(SparseMatrix(tags));

  // Hand evaluation: idf_0 = ln(3/3)+1 = 1, idf_1 = ln(3/2)+1.
  const double idf1 = std::log(3.0 / 2.0) + 1.0;
  const double norm0 = std::sqrt(1.0 + idf1 * idf1);
  CHECK(out.coeff(0, 0) == doctest::Approx(1.0 / norm0).epsilon(1e-12));
  CHECK(out.coeff(0, 1) == doctest::Approx(idf1 / norm0).epsilon(1e-12));
  CHECK(out.coeff(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.coeff(1, 1) == 0.0);

  for (Index i = 0; i < out.rows(); ++i)
    CHECK(out.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tfidf preserves the sparsity pattern and zero rows") {
  std::mt19937_64 rng(11);
  SparseMatrix tags(50, 30);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < 49; ++i)  // row 49 stays all-zero
    for (int j = 0; j < 30; ++j)
      if (rng() % 100 < 12) t.emplace_back(i, j, 1.0);
  tags.setFromTriplets(t.begin(), t.end());
  const SparseMatrix out = tfidf(tags);
  CHECK(out.nonZeros() == tags.nonZeros());
  CHECK(density(out) == doctest::Approx(density(tags)));
  CHECK(out.row(49).norm() == 0.0);
}

TEST_CASE("tfidf is row-permutation equivariant") {
  std::mt19937_64 rng(13);
  SparseMatrix tags(20, 10);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 10; ++j)
      if (rng() % 100 < 25) t.emplace_back(i, j, 1.0);
  tags.setFromTriplets(t.begin(), t.end());

  std::vector<int> perm(20);
  for (int i = 0; i < 20; ++i) perm[i] = (i * 7 + 3) % 20;
  SparseMatrix permuted(20, 10);
  std::vector<Eigen::Triplet<double>> pt;
  for (int i = 0; i < 20; ++i)
    for (SparseMatrix::InnerIterator it(tags, i); it; ++it)
      pt.emplace_back(perm[i], it.col(), it.value());
  permuted.setFromTriplets(pt.begin(), pt.end());

  const Matrix a = Matrix(tfidf(tags));
  const Matrix b = Matrix(tfidf(permuted));
  for (int i = 0; i < 20; ++i)
    CHECK((a.row(i) - b.row(perm[i])).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stratified_split: 10 interactions split 6/2/2") {
  InteractionLog log;
  log.n_users = 1;
  log.n_items = 10;
  for (int i = 0; i < 10; ++i) log.entries.push_back({0, i});
  const Split split = stratified_split(log, 1);
  CHECK(split.train.rows.size() == 6);
  CHECK(split.valid.rows.size() == 2);
  CHECK(split.test.rows.size() == 2);
}

TEST_CASE("stratified_split: single interaction goes to train") {
  InteractionLog log;
  log.n_users = 1;
  log.n_items = 1;
  log.entries.push_back({0, 0});
  const Split split = stratified_split(log, 9);
  CHECK(split.train.rows.size() == 1);
  CHECK(split.valid.rows.empty());
  CHECK(split.test.rows.empty());
  CHECK(split.single_interaction_users == 1);
}

TEST_CASE("stratified_split: every user with >= 2 interactions trains") {
  for (int count = 2; count <= 9; ++count) {
    InteractionLog log;
    log.n_users = 1;
    log.n_items = count;
    for (int i = 0; i < count; ++i) log.entries.push_back({0, i});
    const Split split = stratified_split(log, 5);
    CHECK(split.train.rows.size() >= 1);
    CHECK(split.train.rows.size() + split.valid.rows.size() +
              split.test.rows.size() ==
          static_cast<std::size_t>(count));
  }
}

TEST_CASE("stratified_split is deterministic and partitions the rows") {
  InteractionLog log;
  log.n_users = 30;
  log.n_items = 200;
  std::mt19937_64 rng(3);
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < 900; ++i) {
    const int u = static_cast<int>(rng() % 30);
    const int it = static_cast<int>(rng() % 200);
    if (seen.insert({u, it}).second) log.entries.push_back({u, it});
  }

  const Split a = stratified_split(log, 77);
  const Split b = stratified_split(log, 77);
  CHECK(a.train.rows == b.train.rows);
  CHECK(a.valid.rows == b.valid.rows);
  CHECK(a.test.rows == b.test.rows);

  std::set<std::int32_t> all;
  for (auto r : a.train.rows) CHECK(all.insert(r).second);
  for (auto r : a.valid.rows) CHECK(all.insert(r).second);
  for (auto r : a.test.rows) CHECK(all.insert(r).second);
  CHECK(all.size() == log.entries.size());
}

TEST_CASE("stratified_split global proportions near 64:16:20") {
  InteractionLog log;
  log.n_users = 100;
  log.n_items = 2000;
  std::mt19937_64 rng(17);
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < 5000; ++i) {
    const int u = static_cast<int>(rng() % 100);
    const int it = static_cast<int>(rng() % 2000);
    if (seen.insert({u, it}).second) log.entries.push_back({u, it});
  }
  const Split split = stratified_split(log, 4);
  const double n = static_cast<double>(log.entries.size());
  CHECK(std::abs(split.train.rows.size() / n - 0.64) < 0.02);
  CHECK(std::abs(split.valid.rows.size() / n - 0.16) < 0.02);
  CHECK(std::abs(split.test.rows.size() / n - 0.20) < 0.02);
}
