#pragma once

#include <cstdint>
#include <vector>

#include "qsrf/qubo.hpp"
#include "qsrf/types.hpp"

namespace qsrf {

using Statevector = ComplexVector;  // 2^n amplitudes, unit norm

struct QaoaParams {
  Vector gammas;
  Vector betas;
  int depth() const { return static_cast<int>(gammas.size()); }
};

/// Diagonal of the cost operator in the computational basis. `energies`
/// carries the exact QUBO energies (used for expectations and sampling
/// statistics); `phases` is the same diagonal affinely rescaled to [0, 1],
/// which is what the circuit exponentiates so that large penalty terms do
/// not wrap phases chaotically.
struct CostDiagonal {
  Vector energies;
  Vector phases;
  int n = 0;
  // States whose phase differs from the clipped ceiling of 1; the circuit
  // applies one constant rotation to the whole vector and fixes these up.
  std::vector<std::pair<Index, double>> graded;
};

/// Tabulates energy(problem, z) for every basis state. Guarded to n <= 24.
CostDiagonal precompute_diagonal(const QuboProblem& problem);

/// |+>^n, the uniform superposition every circuit starts from.
Statevector uniform_state(int n);

/// a_z <- a_z * exp(-i de gamma * diag_z); norm preserved.
void apply_cost(Statevector& state, const Eigen::Ref<const Vector>& diag,
                double gamma);

/// exp(-i beta X) on every qubit: [[cos b, -i sin b], [-i sin b, cos b]].
void apply_mixer(Statevector& state, double beta);

/// Uniform superposition followed by `depth` alternating cost (scaled
/// phases) and mixer layers.
Statevector run_circuit(const CostDiagonal& diagonal, const QaoaParams& params);

/// sum_z |a_z|^2 E(z) in original energy units.
double expectation(const Statevector& state, const CostDiagonal& diagonal);

/// `shots` i.i.d. basis-state draws from |a_z|^2; deterministic per seed.
std::vector<std::uint32_t> sample(const Statevector& state, int shots,
                                  std::uint64_t seed);

struct SpsaOptions {
  int iterations = 150;
  int shots = 128;
  double a = 0.2;
  double c = 0.1;
  double alpha = 0.602;
  double gamma_decay = 0.101;
};

struct SpsaResult {
  QaoaParams params;            // elitist: best exact expectation seen
  double best_expectation = 0.0;
  std::vector<double> trace;    // best-so-far exact expectation per iteration
};

/// Simultaneous-perturbation optimization of the 2p angles against the
/// shot-estimated expectation, with gain schedules
/// a_t = a/(t+1+0.1*iters)^alpha and c_t = c/(t+1)^gamma_decay. Returns the
/// iterate with the best exact expectation seen.
SpsaResult spsa_optimize(const CostDiagonal& diagonal, QaoaParams init,
                         const SpsaOptions& options, std::uint64_t seed);

/// Angles drawn uniformly from (0, 0.1); small angles keep the start near
/// the uniform state where the landscape is informative.
QaoaParams random_init(int depth, std::uint64_t seed);

/// sum_z |a_z|^2 phases(z): the circuit-native objective the optimizer works
/// against.
double scaled_expectation(const Statevector& state,
                          const CostDiagonal& diagonal);

/// Deterministic coarse scan over annealing-style shared and ramped angle
/// schedules, scored by the exact scaled expectation. Small random angles
/// start next to a saddle of the landscape; this start does not.
QaoaParams warm_init(const CostDiagonal& diagonal, int depth);

/// From a sample multiset, the cardinality-feasible mask of lowest energy
/// (because the penalty is constant on the feasible set this is the mask of
/// largest weight sum), ties to most frequent then lexicographically
/// smallest. Falls back to the top-k-by-weight mask when no sample is
/// feasible, so the result always carries exactly `budget` ones.
std::vector<std::uint8_t> extract_mask(const std::vector<std::uint32_t>& samples,
                                       const Eigen::Ref<const Vector>& weights,
                                       int budget);

/// Top-k-by-weight selection, ties to the lower index.
std::vector<std::uint8_t> top_k_mask(const Eigen::Ref<const Vector>& weights,
                                     int budget);

}  // namespace qsrf
