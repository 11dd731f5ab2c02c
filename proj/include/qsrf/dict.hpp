#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qsrf/types.hpp"

namespace qsrf {

/// Column-stacked atom pool. Every column has unit Euclidean norm;
/// provenance maps a column back to (cluster id, local index).
struct Dictionary {
  Matrix atoms;  // dim x n_atoms
  std::vector<std::pair<std::int32_t, std::int32_t>> provenance;
};

struct DictLearnOptions {
  Index atoms = 20;
  double lambda = 0.0;  // <= 0 selects 0.1 * mean max-correlation on a warm-up batch
  int epochs = 5;
  Index batch = 2048;
  int threads = 1;
};

struct DictLearnResult {
  Matrix atoms;
  double final_mse = 0.0;
  double lambda = 0.0;
  std::vector<double> objective_trace;  // Eq-style objective per epoch on the monitor batch
};

/// Solves min_theta 0.5*|x - D*theta|^2 + lambda*|theta|_1 by tracing the
/// LARS-Lasso homotopy path down to the requested lambda. `gram` must equal
/// atoms^T * atoms.
Vector lasso_lars(const Eigen::Ref<const Matrix>& atoms,
                  const Eigen::Ref<const Matrix>& gram,
                  const Eigen::Ref<const Vector>& x, double lambda);

/// Sparse-codes every row of `rows` against the atom pool. Rows are
/// independent; chunked parallelism keeps results thread-count invariant.
SparseMatrix encode(const Eigen::Ref<const Matrix>& rows,
                    const Eigen::Ref<const Matrix>& atoms, double lambda,
                    int threads = 1);

/// Max KKT violation of a Lasso solution: |d_j^T r| <= lambda for zero
/// coordinates, d_j^T r = lambda * sign(theta_j) for active ones.
double lasso_kkt_residual(const Eigen::Ref<const Matrix>& atoms,
                          const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& theta, double lambda);

double lasso_objective(const Eigen::Ref<const Matrix>& atoms,
                       const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& theta, double lambda);

/// Alternating sparse coding / per-atom block-coordinate updates on
/// mini-batches. Atoms stay unit-norm; atoms never activated during an
/// epoch are re-seeded on the worst-reconstructed monitor row. When the
/// cluster has fewer rows than requested atoms, min(rows, atoms) atoms are
/// learned. Deterministic per seed; returns the best dictionary seen on the
/// fixed monitor batch.
DictLearnResult learn_subdictionary(const Eigen::Ref<const Matrix>& rows,
                                    const DictLearnOptions& options,
                                    std::uint64_t seed);

/// Alternating passes restricted to an existing atom set: codes are re-fit,
/// then each atom takes its per-atom least-squares update. Atoms keep their
/// identity (no re-seeding) and their unit norm.
Matrix fine_tune_atoms(const Eigen::Ref<const Matrix>& rows,
                       const Eigen::Ref<const Matrix>& atoms, double lambda,
                       int epochs, std::uint64_t seed, int threads = 1);

/// Stacks per-cluster atom matrices in cluster order and records
/// (cluster, local index) provenance. Throws on row-dimension mismatch.
Dictionary concat_dictionary(const std::vector<Matrix>& parts);

/// Mean squared entry of rows - codes * atoms^T.
double reconstruction_mse(const Eigen::Ref<const Matrix>& rows,
                          const Eigen::Ref<const Matrix>& atoms,
                          const SparseMatrix& codes);

/// COO text persistence with a `#provenance` section of
/// `atom<TAB>cluster<TAB>local` lines.
void save_dictionary(const Dictionary& dict, const std::string& path);
Dictionary load_dictionary(const std::string& path);

}  // namespace qsrf
