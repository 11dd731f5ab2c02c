#include "qsrf/qubo.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsrf {
namespace {

bool lex_less(std::uint32_t a, std::uint32_t b, int n) {
  // Lexicographic order on (z_0, z_1, ..., z_{n-1}).
  for (int j = 0; j < n; ++j) {
    const unsigned abit = (a >> j) & 1u;
    const unsigned bbit = (b >> j) & 1u;
    if (abit != bbit) return abit < bbit;
  }
  return false;
}

}  // namespace

QuboProblem build_qubo(const Eigen::Ref<const Vector>& weights, int budget,
                       double penalty, QuboForm form) {
  const int n = static_cast<int>(weights.size());
  if (n < 1) throw std::invalid_argument("build_qubo: empty weight vector");
  if (budget < 1 || budget > n)
    throw std::invalid_argument("build_qubo: budget outside [1, n]");
  if (penalty <= 0.0) throw std::invalid_argument("build_qubo: penalty <= 0");

  QuboProblem p;
  p.n = n;
  p.budget = budget;
  p.penalty = penalty;
  p.coeffs.resize(n, n);
  switch (form) {
    case QuboForm::Exact:
      // z_j^2 = z_j folds the linear terms onto the diagonal.
      p.coeffs.setConstant(penalty);
      for (int j = 0; j < n; ++j)
        p.coeffs(j, j) = -weights[j] + penalty * (1.0 - 2.0 * budget);
      p.offset = penalty * static_cast<double>(budget) * budget;
      break;
    case QuboForm::OnesOuter:
      p.coeffs.setConstant(penalty);
      for (int j = 0; j < n; ++j) p.coeffs(j, j) = -weights[j] + penalty;
      p.offset = 0.0;
      break;
    case QuboForm::WeightOuter:
      p.coeffs = weights * weights.transpose();
      p.coeffs.diagonal().array() += penalty;
      p.offset = 0.0;
      break;
  }
  return p;
}

double energy(const QuboProblem& problem, const std::vector<std::uint8_t>& z) {
  if (static_cast<int>(z.size()) != problem.n)
    throw std::invalid_argument("energy: bitstring length != n");
  std::uint32_t mask = 0;
  for (int j = 0; j < problem.n; ++j)
    if (z[static_cast<std::size_t>(j)]) mask |= (1u << j);
  return energy(problem, mask);
}

double energy(const QuboProblem& problem, std::uint32_t mask) {
  double acc = problem.offset;
  for (int i = 0; i < problem.n; ++i) {
    if (!((mask >> i) & 1u)) continue;
    acc += problem.coeffs(i, i);
    for (int j = i + 1; j < problem.n; ++j)
      if ((mask >> j) & 1u) acc += 2.0 * problem.coeffs(i, j);
  }
  return acc;
}

BruteForceResult brute_force_minimum(const QuboProblem& problem) {
  if (problem.n > 24)
    throw std::invalid_argument("brute_force_minimum: n > 24 refused");
  const int n = problem.n;
  const std::uint64_t count = std::uint64_t{1} << n;

  // Gray-code walk keeps each step O(n); near-ties are re-evaluated with the
  // direct quadratic form so accumulated drift cannot decide a winner.
  std::uint32_t gray = 0;
  double e = problem.offset;
  std::uint32_t best_mask = 0;
  double best_energy = problem.offset;
  const double tie_tol =
      1e-9 * (1.0 + std::abs(problem.offset) +
              problem.coeffs.cwiseAbs().maxCoeff() * n);

  for (std::uint64_t step = 1; step < count; ++step) {
    const int flip = std::countr_zero(step);
    const std::uint32_t flip_bit = 1u << flip;
    double cross = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != flip && ((gray >> j) & 1u)) cross += problem.coeffs(flip, j);
    const double delta = problem.coeffs(flip, flip) + 2.0 * cross;
    if (gray & flip_bit) {
      e -= delta;
      gray &= ~flip_bit;
    } else {
      e += delta;
      gray |= flip_bit;
    }

    if (e < best_energy - tie_tol) {
      best_energy = energy(problem, gray);
      best_mask = gray;
    } else if (e < best_energy + tie_tol) {
      const double exact = energy(problem, gray);
      if (exact < best_energy ||
          (exact == best_energy && lex_less(gray, best_mask, n))) {
        best_energy = exact;
        best_mask = gray;
      }
    }
  }

  BruteForceResult result;
  result.mask = best_mask;
  result.energy = best_energy;
  result.bits.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    result.bits[static_cast<std::size_t>(j)] =
        static_cast<std::uint8_t>((best_mask >> j) & 1u);
  return result;
}

void save_qubo(const QuboProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write qubo file: " + path);
  out.precision(17);
  out << "#n=" << problem.n << " offset=" << problem.offset << "\n";
  for (int i = 0; i < problem.n; ++i)
    for (int j = i; j < problem.n; ++j)
      if (problem.coeffs(i, j) != 0.0)
        out << i << '\t' << j << '\t' << problem.coeffs(i, j) << '\n';
}

QuboProblem load_qubo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qubo file: " + path);
  QuboProblem p;
  std::string line;
  long n = -1;
  double offset = 0.0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::sscanf(line.c_str(), "#n=%ld offset=%lf", &n, &offset);
      if (n > 0) {
        p.n = static_cast<int>(n);
        p.offset = offset;
        p.coeffs = Matrix::Zero(n, n);
      }
      continue;
    }
    if (n <= 0) throw std::runtime_error(path + ": data before header");
    std::istringstream ls(line);
    long i, j;
    double v;
    if (!(ls >> i >> j >> v))
      throw std::runtime_error(path + ": bad qubo line " +
                               std::to_string(line_no));
    p.coeffs(i, j) = v;
    p.coeffs(j, i) = v;
  }
  if (n <= 0) throw std::runtime_error(path + ": missing `#n=` header");
  return p;
}

QuboForm qubo_form_from_string(const std::string& name) {
  if (name == "exact") return QuboForm::Exact;
  if (name == "ones-outer") return QuboForm::OnesOuter;
  if (name == "weight-outer") return QuboForm::WeightOuter;
  throw std::invalid_argument("unknown qubo form: " + name);
}

std::string to_string(QuboForm form) {
  switch (form) {
    case QuboForm::Exact: return "exact";
    case QuboForm::OnesOuter: return "ones-outer";
    case QuboForm::WeightOuter: return "weight-outer";
  }
  return "exact";
}

}  // namespace qsrf
