#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsrf/types.hpp"

namespace qsrf {

/// The three published coefficient conventions for the atom-selection
/// problem. `Exact` expands the cardinality-penalized energy
///   E(z) = -sum_j w_j z_j + mu * (sum_j z_j - k)^2
/// term by term and is the only form whose minimizer provably carries
/// exactly k ones. The other two drop parts of that expansion and exist for
/// reproduction experiments.
enum class QuboForm {
  Exact,        // full expansion with offset mu*k^2
  OnesOuter,    // Q = -diag(w) + mu * ones*ones^T, offset 0
  WeightOuter,  // Q = w*w^T + mu * I, offset 0
};

struct QuboProblem {
  Matrix coeffs;       // symmetric n x n
  double offset = 0.0;
  int n = 0;
  int budget = 0;
  double penalty = 0.0;
};

/// Builds the selection QUBO for `weights` with the given budget and
/// penalty. Throws when penalty <= 0, budget outside [1, n], or n == 0.
QuboProblem build_qubo(const Eigen::Ref<const Vector>& weights, int budget,
                       double penalty, QuboForm form = QuboForm::Exact);

/// z^T Q z + offset with z in {0,1}^n. The bitstring overload throws on a
/// length mismatch; the mask overload reads bit j of `mask` as z_j.
double energy(const QuboProblem& problem, const std::vector<std::uint8_t>& z);
double energy(const QuboProblem& problem, std::uint32_t mask);

struct BruteForceResult {
  std::vector<std::uint8_t> bits;
  std::uint32_t mask = 0;
  double energy = 0.0;
};

/// Exact minimizer over all 2^n bitstrings, ties resolved to the
/// lexicographically smallest bitstring (z_0 first). Refuses n > 24.
BruteForceResult brute_force_minimum(const QuboProblem& problem);

/// Upper-triangle text export: header `#n=<n> offset=<o>`, lines
/// `i<TAB>j<TAB>value`.
void save_qubo(const QuboProblem& problem, const std::string& path);
QuboProblem load_qubo(const std::string& path);

QuboForm qubo_form_from_string(const std::string& name);
std::string to_string(QuboForm form);

}  // namespace qsrf
