#include "qsrf/sketch.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <stdexcept>

#include "qsrf/rng.hpp"

namespace qsrf {
namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Matrix orthonormalize(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Shared across the sparse and dense entry points; MatrixT only needs
// products with dense matrices from both sides.
template <typename MatrixT>
SvdSketch randomized_svd_impl(const MatrixT& x, Index rank, Index oversample,
                              int power_iters, std::uint64_t seed) {
  const Index rows = x.rows();
  const Index cols = x.cols();
  if (rank < 1 || rank > std::min(rows, cols))
    throw std::invalid_argument("randomized_svd: rank must be in [1, min(rows, cols)]");

  const Index sketch_cols = std::min(rank + oversample, std::min(rows, cols));
  Matrix omega = gaussian_matrix(cols, sketch_cols,
                                 derive_seed(seed, stream::kSvd));
  Matrix q = orthonormalize(x * omega);
  for (int it = 0; it < power_iters; ++it) {
    q = orthonormalize(Matrix(x.transpose() * q));
    q = orthonormalize(Matrix(x * q));
  }

  Matrix b = q.transpose() * x;  // sketch_cols x cols
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinV);

  SvdSketch out;
  out.right_vectors = svd.matrixV().leftCols(rank);
  out.singular_values = svd.singularValues().head(rank);

  // Deterministic sign: largest-magnitude component of each right vector
  // is made nonnegative before the sketch is formed.
  for (Index j = 0; j < rank; ++j) {
    Index arg_max = 0;
    out.right_vectors.col(j).cwiseAbs().maxCoeff(&arg_max);
    if (out.right_vectors(arg_max, j) < 0.0) out.right_vectors.col(j) *= -1.0;
  }
  out.sketch = x * out.right_vectors;
  return out;
}

template <typename MatrixT>
double energy_captured_impl(const SvdSketch& sketch, const MatrixT& x) {
  const double total = x.squaredNorm();
  if (total <= 0.0)
    throw std::invalid_argument("energy_captured: zero matrix");
  return sketch.singular_values.squaredNorm() / total;
}

}  // namespace

SvdSketch randomized_svd(const SparseMatrix& x, Index rank, Index oversample,
                         int power_iters, std::uint64_t seed) {
  return randomized_svd_impl(x, rank, oversample, power_iters, seed);
}

SvdSketch randomized_svd(const Eigen::Ref<const Matrix>& x, Index rank,
                         Index oversample, int power_iters,
                         std::uint64_t seed) {
  return randomized_svd_impl(x, rank, oversample, power_iters, seed);
}

double energy_captured(const SvdSketch& sketch, const SparseMatrix& x) {
  return energy_captured_impl(sketch, x);
}

double energy_captured(const SvdSketch& sketch,
                       const Eigen::Ref<const Matrix>& x) {
  return energy_captured_impl(sketch, x);
}

}  // namespace qsrf
