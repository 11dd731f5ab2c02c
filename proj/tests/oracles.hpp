#pragma once

// Test-only reference implementations. Each one takes an algebraic route
// independent of the library code it checks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "qsrf/types.hpp"

namespace oracle {

using qsrf::Index;
using qsrf::Matrix;
using qsrf::Vector;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Cyclic coordinate descent for min 0.5*|x - D*theta|^2 + lambda*|theta|_1.
inline Vector lasso_coordinate_descent(const Matrix& atoms, const Vector& x,
                                       double lambda, int sweeps = 20000,
                                       double tol = 1e-13) {
  const Index n = atoms.cols();
  Vector theta = Vector::Zero(n);
  Vector residual = x;
  Vector col_norms(n);
  for (Index j = 0; j < n; ++j) col_norms[j] = atoms.col(j).squaredNorm();

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (col_norms[j] <= 0.0) continue;
      const double rho = atoms.col(j).dot(residual) + col_norms[j] * theta[j];
      double updated = 0.0;
      if (rho > lambda)
        updated = (rho - lambda) / col_norms[j];
      else if (rho < -lambda)
        updated = (rho + lambda) / col_norms[j];
      const double change = updated - theta[j];
      if (change != 0.0) {
        residual -= change * atoms.col(j);
        theta[j] = updated;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change < tol) break;
  }
  return theta;
}

// Exact singular values of X from the eigendecomposition of X^T X.
inline Vector exact_singular_values(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x.transpose() * x);
  Vector values = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(values.data(), values.data() + values.size(),
            std::greater<double>());
  return values;
}

// Dense QAOA layer oracle: diagonal cost unitary from given phase values and
// the mixer as an explicit Kronecker power of the 2x2 rotation.
inline ComplexMatrix dense_cost_unitary(const Vector& phases, double gamma) {
  const Index dim = phases.size();
  ComplexMatrix u = ComplexMatrix::Zero(dim, dim);
  for (Index z = 0; z < dim; ++z)
    u(z, z) = std::polar(1.0, -gamma * phases[z]);
  return u;
}

inline ComplexMatrix dense_mixer_unitary(int n, double beta) {
  ComplexMatrix single(2, 2);
  const std::complex<double> ms(0.0, -std::sin(beta));
  single << std::cos(beta), ms, ms, std::cos(beta);
  ComplexMatrix u = ComplexMatrix::Identity(1, 1);
  for (int q = 0; q < n; ++q) {
    ComplexMatrix next(u.rows() * 2, u.cols() * 2);
    next.topLeftCorner(u.rows(), u.cols()) = single(0, 0) * u;
    next.topRightCorner(u.rows(), u.cols()) = single(0, 1) * u;
    next.bottomLeftCorner(u.rows(), u.cols()) = single(1, 0) * u;
    next.bottomRightCorner(u.rows(), u.cols()) = single(1, 1) * u;
    u = next;
  }
  return u;
}

// Z-basis diagonal of sum_{i<=j} Q_ij Z_i Z_j built from explicit Kronecker
// products, mapped back through z in {0,1} -> (1-2z) in {+1,-1}.
inline Vector dense_ising_diagonal(const Matrix& q) {
  const int n = static_cast<int>(q.rows());
  const Index dim = Index{1} << n;
  Vector diag = Vector::Zero(dim);
  for (Index z = 0; z < dim; ++z) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double zi = ((z >> i) & 1) ? -1.0 : 1.0;
      for (int j = i; j < n; ++j) {
        const double zj = ((z >> j) & 1) ? -1.0 : 1.0;
        acc += q(i, j) * zi * zj;
      }
    }
    diag[z] = acc;
  }
  return diag;
}

// Direct evaluation of the cardinality-penalized selection energy.
inline double selection_energy(const Vector& weights, int budget,
                               double penalty, std::uint32_t mask) {
  double linear = 0.0;
  int ones = 0;
  for (Index j = 0; j < weights.size(); ++j)
    if ((mask >> j) & 1u) {
      linear += weights[j];
      ++ones;
    }
  const double violation = static_cast<double>(ones - budget);
  return -linear + penalty * violation * violation;
}

// Pairwise-counting AUC with half credit for ties.
inline double pairwise_auc(const std::vector<double>& scores,
                           const std::vector<int>& labels) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Exhaustive 2-means: every bipartition of the points.
inline std::vector<int> best_two_means(const Matrix& points) {
  const Index n = points.rows();
  double best_cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    Vector c0 = Vector::Zero(points.cols());
    Vector c1 = Vector::Zero(points.cols());
    int n0 = 0, n1 = 0;
    for (Index i = 0; i < n; ++i) {
      if ((mask >> i) & 1u) {
        c1 += points.row(i).transpose();
        ++n1;
      } else {
        c0 += points.row(i).transpose();
        ++n0;
      }
    }
    c0 /= n0;
    c1 /= n1;
    double cost = 0.0;
    for (Index i = 0; i < n; ++i)
      cost += ((mask >> i) & 1u)
                  ? (points.row(i).transpose() - c1).squaredNorm()
                  : (points.row(i).transpose() - c0).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best_mask = mask;
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] = (best_mask >> i) & 1u;
  return labels;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_unit_atoms(Index dim, Index count, std::uint64_t seed) {
  Matrix atoms = random_matrix(dim, count, seed);
  for (Index j = 0; j < count; ++j) atoms.col(j).normalize();
  return atoms;
}

}  // namespace oracle
