#pragma once

#include <cstdint>

#include "qsrf/types.hpp"

namespace qsrf {

/// Rank-d factorization of the item profile matrix: right singular vectors
/// V_d (orthonormal columns), leading singular values, and the projected
/// rows Z = X * V_d.
struct SvdSketch {
  Matrix right_vectors;    // cols x rank
  Vector singular_values;  // rank, nonincreasing
  Matrix sketch;           // rows x rank
};

/// Randomized range-finder SVD with Gaussian test matrix, oversampling and
/// power iterations. Deterministic for a fixed seed; each right vector is
/// signed so its largest-magnitude component is nonnegative.
/// Throws std::invalid_argument when rank is outside [1, min(rows, cols)].
SvdSketch randomized_svd(const SparseMatrix& x, Index rank,
                         Index oversample = 10, int power_iters = 2,
                         std::uint64_t seed = 0);
SvdSketch randomized_svd(const Eigen::Ref<const Matrix>& x, Index rank,
                         Index oversample = 10, int power_iters = 2,
                         std::uint64_t seed = 0);

/// Fraction of squared Frobenius norm captured by the sketch,
/// sum(sigma_i^2) / |X|_F^2. Throws on a zero matrix.
double energy_captured(const SvdSketch& sketch, const SparseMatrix& x);
double energy_captured(const SvdSketch& sketch,
                       const Eigen::Ref<const Matrix>& x);

}  // namespace qsrf
