#include <doctest.h>

#include <bit>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "qsrf/qubo.hpp"

using namespace qsrf;

namespace {

Vector random_weights(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = unit(rng);
  return w;
}

}  // namespace

TEST_CASE("empty selection pays the full cardinality penalty") {
  const Vector w = Vector::Zero(6);
  const QuboProblem p = build_qubo(w, 3, 10.0);
  CHECK(energy(p, std::uint32_t{0}) == doctest::Approx(90.0));  // mu * k^2
  CHECK(p.offset == doctest::Approx(90.0));
}

TEST_CASE("hand case: n=3, k=1, mu=10, w=(1,2,3), z=(0,0,1)") {
  Vector w(3);
  w << 1, 2, 3;
  const QuboProblem p = build_qubo(w, 1, 10.0);
  std::vector<std::uint8_t> z{0, 0, 1};
  CHECK(energy(p, z) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(energy(p, z) ==
        doctest::Approx(oracle::selection_energy(w, 1, 10.0, 0b100)));
}

TEST_CASE("feasible supported selections cost minus the weight sum") {
  const Vector w = random_weights(8, 3);
  const QuboProblem p = build_qubo(w, 3, 1000.0);
  const std::uint32_t mask = 0b10010100;  // exactly 3 ones
  double expected = 0.0;
  for (int j = 0; j < 8; ++j)
    if ((mask >> j) & 1u) expected -= w[j];
  CHECK(energy(p, mask) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("energy equals the direct formula for all z up to n=12") {
  for (int n : {4, 8, 12}) {
    const Vector w = random_weights(n, 40 + n);
    for (int k : {1, 3, 5}) {
      if (k > n) continue;
      const QuboProblem p = build_qubo(w, k, 1000.0);
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        CHECK(energy(p, mask) ==
              doctest::Approx(oracle::selection_energy(w, k, 1000.0, mask))
                  .epsilon(1e-9));
    }
  }
}

TEST_CASE("energy length mismatch throws") {
  const QuboProblem p = build_qubo(random_weights(4, 1), 2, 10.0);
  std::vector<std::uint8_t> wrong{1, 0};
  CHECK_THROWS_AS(energy(p, wrong), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  const Vector w = random_weights(4, 2);
  CHECK_THROWS_AS(build_qubo(w, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_qubo(w, 2, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_qubo(w, 0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(build_qubo(w, 5, 10.0), std::invalid_argument);
}

TEST_CASE("coefficients are symmetric") {
  for (QuboForm form :
       {QuboForm::Exact, QuboForm::OnesOuter, QuboForm::WeightOuter}) {
    const QuboProblem p = build_qubo(random_weights(9, 77), 4, 500.0, form);
    CHECK((p.coeffs - p.coeffs.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("published variant forms evaluate to their algebraic formulas") {
  const int n = 7;
  const Vector w = random_weights(n, 11);
  const double mu = 200.0;
  const QuboProblem ones = build_qubo(w, 3, mu, QuboForm::OnesOuter);
  const QuboProblem outer = build_qubo(w, 3, mu, QuboForm::WeightOuter);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double linear = 0.0, dot = 0.0;
    int ones_count = 0;
    for (int j = 0; j < n; ++j)
      if ((mask >> j) & 1u) {
        linear += w[j];
        dot += w[j];
        ++ones_count;
      }
    const double s = static_cast<double>(ones_count);
    CHECK(energy(ones, mask) ==
          doctest::Approx(-linear + mu * s * s).epsilon(1e-9));
    CHECK(energy(outer, mask) ==
          doctest::Approx(dot * dot + mu * s).epsilon(1e-9));
  }
}

TEST_CASE("brute force: k=1 picks the argmax weight") {
  Vector w(6);
  w << 0.3, 0.9, 0.1, 0.5, 0.7, 0.2;
  const auto result = brute_force_minimum(build_qubo(w, 1, 1000.0));
  CHECK(result.mask == (1u << 1));
  CHECK(result.energy == doctest::Approx(-0.9));
}

TEST_CASE("dominating penalty selects the k largest weights") {
  const int n = 10;
  const Vector w = random_weights(n, 21);
  const auto result = brute_force_minimum(build_qubo(w, 4, 1000.0));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
  std::uint32_t expected = 0;
  for (int i = 0; i < 4; ++i) expected |= (1u << order[i]);
  CHECK(result.mask == expected);
}

TEST_CASE("constraint dominance: every minimizer has exactly k ones") {
  for (int n : {8, 10, 12}) {
    for (int k : {2, 3, 5}) {
      const Vector w = random_weights(n, 900 + n * 10 + k);
      const double mu = 1.5 * n * w.cwiseAbs().maxCoeff();
      const QuboProblem p = build_qubo(w, k, mu);
      const double minimum = brute_force_minimum(p).energy;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
        if (std::abs(energy(p, mask) - minimum) < 1e-9)
          CHECK(std::popcount(mask) == k);
    }
  }
}

TEST_CASE("brute force ties resolve to the lexicographically smallest") {
  Vector w(4);
  w << 1.0, 1.0, 1.0, 1.0;  // all k-subsets tie
  const auto result = brute_force_minimum(build_qubo(w, 2, 1000.0));
  // Lex order reads (z_0, z_1, ...) left to right, so "0011" beats "1100".
  CHECK(result.mask == 0b1100u);
  CHECK(result.bits == std::vector<std::uint8_t>{0, 0, 1, 1});
}

TEST_CASE("permuting weights permutes the minimizer") {
  const int n = 9;
  const Vector w = random_weights(n, 31);
  const auto base = brute_force_minimum(build_qubo(w, 3, 1000.0));
  std::vector<int> perm{3, 1, 4, 0, 8, 2, 7, 5, 6};
  Vector pw(n);
  for (int j = 0; j < n; ++j) pw[perm[j]] = w[j];
  const auto permuted = brute_force_minimum(build_qubo(pw, 3, 1000.0));
  for (int j = 0; j < n; ++j)
    CHECK(((permuted.mask >> perm[j]) & 1u) == ((base.mask >> j) & 1u));
}

TEST_CASE("n=20 brute force completes and beats the greedy mask") {
  const Vector w = random_weights(20, 61);
  const QuboProblem p = build_qubo(w, 5, 1000.0);
  const auto result = brute_force_minimum(p);
  std::vector<int> order(20);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
  std::uint32_t greedy = 0;
  for (int i = 0; i < 5; ++i) greedy |= (1u << order[i]);
  CHECK(result.energy <= energy(p, greedy) + 1e-12);
}

TEST_CASE("n above the guard is refused") {
  const QuboProblem p = build_qubo(random_weights(25, 1), 3, 10.0);
  CHECK_THROWS_AS(brute_force_minimum(p), std::invalid_argument);
}

TEST_CASE("qubo text round-trip") {
  const QuboProblem p = build_qubo(random_weights(6, 91), 2, 750.0);
  const auto path =
      (std::filesystem::temp_directory_path() / "qsrf_qubo.tsv").string();
  save_qubo(p, path);
  const QuboProblem reloaded = load_qubo(path);
  CHECK(reloaded.n == p.n);
  CHECK(reloaded.offset == doctest::Approx(p.offset));
  CHECK((reloaded.coeffs - p.coeffs).cwiseAbs().maxCoeff() < 1e-15);
}
