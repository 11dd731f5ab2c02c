#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace qsrf {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Row-compressed nonnegative matrix; the storage for item-tag profiles,
/// binary interactions and sparse codes.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Fraction of structurally nonzero entries.
inline double density(const SparseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return static_cast<double>(m.nonZeros()) /
         (static_cast<double>(m.rows()) * static_cast<double>(m.cols()));
}

}  // namespace qsrf
