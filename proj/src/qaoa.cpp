#include "qsrf/qaoa.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qsrf/parallel.hpp"
#include "qsrf/rng.hpp"

namespace qsrf {

CostDiagonal precompute_diagonal(const QuboProblem& problem) {
  if (problem.n > 24)
    throw std::invalid_argument("precompute_diagonal: n > 24 refused");
  CostDiagonal diag;
  diag.n = problem.n;
  const Index count = Index{1} << problem.n;
  diag.energies.resize(count);
  parallel_chunks(count, 1 << 14, default_threads(), [&](Index begin, Index end) {
    for (Index z = begin; z < end; ++z)
      diag.energies[z] = energy(problem, static_cast<std::uint32_t>(z));
  });

  // Affine rescale to [0, 1] with the unit set at a low order statistic
  // instead of the maximum: a huge cardinality penalty would otherwise
  // compress the informative low-energy band into a vanishing phase range.
  // Everything above the cut clips to exactly 1, so no phase wraps
  // chaotically and the handful of best states keep a graded contrast the
  // shallow circuit can resolve.
  const double lo = diag.energies.minCoeff();
  const auto cut = static_cast<std::ptrdiff_t>(
      std::min(count - 1, std::clamp<Index>(count / 1024, 3, 8)));
  std::vector<double> sorted(diag.energies.data(),
                             diag.energies.data() + count);
  std::nth_element(sorted.begin(), sorted.begin() + cut, sorted.end());
  double scale = sorted[static_cast<std::size_t>(cut)] - lo;
  if (scale <= 0.0) scale = diag.energies.maxCoeff() - lo;
  if (scale > 0.0)
    diag.phases =
        ((diag.energies.array() - lo) / scale).min(1.0).matrix();
  else
    diag.phases = Vector::Zero(count);
  for (Index z = 0; z < count; ++z)
    if (diag.phases[z] != 1.0) diag.graded.emplace_back(z, diag.phases[z]);
  return diag;
}

Statevector uniform_state(int n) {
  const Index count = Index{1} << n;
  return Statevector::Constant(count,
                               std::complex<double>(1.0 / std::sqrt(
                                                        static_cast<double>(count)),
                                                    0.0));
}

void apply_cost(Statevector& state, const Eigen::Ref<const Vector>& diag,
                double gamma) {
  for (Index z = 0; z < state.size(); ++z)
    state[z] *= std::polar(1.0, -gamma * diag[z]);
}

void apply_mixer(Statevector& state, double beta) {
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const Index count = state.size();
  // Interleaved (re, im) view; -i*s*(re + i*im) = s*im - i*s*re.
  auto* d = reinterpret_cast<double*>(state.data());
  for (Index stride = 1; stride < count; stride <<= 1) {
    for (Index base = 0; base < count; base += 2 * stride) {
      double* lo = d + 2 * base;
      double* hi = d + 2 * (base + stride);
      for (Index i = 0; i < stride; ++i) {
        const double re0 = lo[2 * i];
        const double im0 = lo[2 * i + 1];
        const double re1 = hi[2 * i];
        const double im1 = hi[2 * i + 1];
        lo[2 * i] = c * re0 + s * im1;
        lo[2 * i + 1] = c * im0 - s * re1;
        hi[2 * i] = c * re1 + s * im0;
        hi[2 * i + 1] = c * im1 - s * re0;
      }
    }
  }
}

Statevector run_circuit(const CostDiagonal& diagonal, const QaoaParams& params) {
  if (params.gammas.size() != params.betas.size())
    throw std::invalid_argument("run_circuit: gamma/beta depth mismatch");
  Statevector state = uniform_state(diagonal.n);
  const bool sparse_phases =
      diagonal.graded.size() * 4 < static_cast<std::size_t>(state.size());
  for (int layer = 0; layer < params.depth(); ++layer) {
    const double gamma = params.gammas[layer];
    if (sparse_phases) {
      // Clipped diagonal: one constant rotation plus per-state fixups.
      state *= std::polar(1.0, -gamma);
      for (const auto& [z, phase] : diagonal.graded)
        state[z] *= std::polar(1.0, -gamma * (phase - 1.0));
    } else {
      apply_cost(state, diagonal.phases, gamma);
    }
    apply_mixer(state, params.betas[layer]);
  }
  return state;
}

double expectation(const Statevector& state, const CostDiagonal& diagonal) {
  if (state.size() != diagonal.energies.size())
    throw std::invalid_argument("expectation: size mismatch");
  double acc = 0.0;
  for (Index z = 0; z < state.size(); ++z)
    acc += std::norm(state[z]) * diagonal.energies[z];
  return acc;
}

std::vector<std::uint32_t> sample(const Statevector& state, int shots,
                                  std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample: shots < 1");
  Vector cdf(state.size());
  double acc = 0.0;
  for (Index z = 0; z < state.size(); ++z) {
    acc += std::norm(state[z]);
    cdf[z] = acc;
  }
  const double total = acc;

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(shots));
  for (int s = 0; s < shots; ++s) {
    const double u = unit(rng) * total;
    const double* begin = cdf.data();
    const double* it = std::lower_bound(begin, begin + cdf.size(), u);
    Index z = std::min<Index>(static_cast<Index>(it - begin), cdf.size() - 1);
    out[static_cast<std::size_t>(s)] = static_cast<std::uint32_t>(z);
  }
  return out;
}

SpsaResult spsa_optimize(const CostDiagonal& diagonal, QaoaParams init,
                         const SpsaOptions& options, std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, stream::kQaoa));
  std::bernoulli_distribution coin(0.5);
  std::uint64_t shot_stream = 0;

  // The search objective averages the clipped scaled diagonal rather than
  // raw energies: identical minimizers on the informative band, but the
  // shot noise stays O(1/sqrt(shots)) instead of O(penalty), which keeps
  // the fixed gain schedule meaningful. Elitist selection below is still
  // measured in exact original units.
  auto shot_objective = [&](const QaoaParams& params) {
    Statevector state = run_circuit(diagonal, params);
    auto draws = sample(state, options.shots,
                        derive_seed(seed, stream::kQaoa, ++shot_stream));
    double acc = 0.0;
    for (std::uint32_t z : draws) acc += diagonal.phases[z];
    return acc / static_cast<double>(draws.size());
  };

  const int dim = init.depth();
  SpsaResult result;
  result.params = init;
  result.best_expectation = expectation(run_circuit(diagonal, init), diagonal);
  result.trace.reserve(static_cast<std::size_t>(options.iterations));

  QaoaParams current = init;
  const double stability = 0.1 * options.iterations;
  for (int t = 0; t < options.iterations; ++t) {
    const double a_t = options.a / std::pow(t + 1.0 + stability, options.alpha);
    const double c_t = options.c / std::pow(t + 1.0, options.gamma_decay);

    Vector delta_g(dim), delta_b(dim);
    for (int i = 0; i < dim; ++i) delta_g[i] = coin(rng) ? 1.0 : -1.0;
    for (int i = 0; i < dim; ++i) delta_b[i] = coin(rng) ? 1.0 : -1.0;

    QaoaParams plus{current.gammas + c_t * delta_g,
                    current.betas + c_t * delta_b};
    QaoaParams minus{current.gammas - c_t * delta_g,
                     current.betas - c_t * delta_b};
    const double y_plus = shot_objective(plus);
    const double y_minus = shot_objective(minus);
    const double scale = (y_plus - y_minus) / (2.0 * c_t);

    // Rademacher perturbations make 1/delta == delta.
    current.gammas -= a_t * scale * delta_g;
    current.betas -= a_t * scale * delta_b;

    const double exact = expectation(run_circuit(diagonal, current), diagonal);
    if (exact < result.best_expectation) {
      result.best_expectation = exact;
      result.params = current;
    }
    result.trace.push_back(result.best_expectation);
  }
  return result;
}

double scaled_expectation(const Statevector& state, const CostDiagonal& diagonal) {
  double acc = 0.0;
  for (Index z = 0; z < state.size(); ++z)
    acc += std::norm(state[z]) * diagonal.phases[z];
  return acc;
}

QaoaParams warm_init(const CostDiagonal& diagonal, int depth) {
  static constexpr double kGamma[] = {M_PI / 2, M_PI,     1.5 * M_PI,
                                      2 * M_PI, 2.5 * M_PI, 3 * M_PI};
  static constexpr double kBeta[] = {M_PI / 16, M_PI / 8, 3 * M_PI / 16,
                                     M_PI / 4,  3 * M_PI / 8, M_PI / 2};
  QaoaParams best;
  best.gammas = Vector::Zero(depth);
  best.betas = Vector::Zero(depth);
  double best_value = std::numeric_limits<double>::infinity();
  for (double gamma0 : kGamma)
    for (double beta0 : kBeta)
      for (int ramp = 0; ramp < 2; ++ramp) {
        QaoaParams candidate;
        candidate.gammas.resize(depth);
        candidate.betas.resize(depth);
        for (int layer = 0; layer < depth; ++layer) {
          const double up = (layer + 1.0) / depth;
          candidate.gammas[layer] = ramp ? gamma0 * up : gamma0;
          candidate.betas[layer] =
              ramp ? beta0 * (1.0 - up + 1.0 / depth) : beta0;
        }
        const double value =
            scaled_expectation(run_circuit(diagonal, candidate), diagonal);
        if (value < best_value) {
          best_value = value;
          best = candidate;
        }
      }
  return best;
}

QaoaParams random_init(int depth, std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, stream::kQaoa, 0xa11));
  std::uniform_real_distribution<double> small(0.0, 0.1);
  QaoaParams params;
  params.gammas.resize(depth);
  params.betas.resize(depth);
  for (int i = 0; i < depth; ++i) params.gammas[i] = small(rng);
  for (int i = 0; i < depth; ++i) params.betas[i] = small(rng);
  return params;
}

std::vector<std::uint8_t> top_k_mask(const Eigen::Ref<const Vector>& weights,
                                     int budget) {
  const Index n = weights.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return weights[a] > weights[b]; });
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < budget; ++i)
    mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return mask;
}

std::vector<std::uint8_t> extract_mask(const std::vector<std::uint32_t>& samples,
                                       const Eigen::Ref<const Vector>& weights,
                                       int budget) {
  if (samples.empty()) throw std::invalid_argument("extract_mask: no samples");
  const int n = static_cast<int>(weights.size());

  std::vector<std::uint32_t> sorted = samples;
  std::sort(sorted.begin(), sorted.end());

  bool found = false;
  std::uint32_t best_mask = 0;
  double best_weight = 0.0;
  std::size_t best_count = 0;

  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const std::uint32_t mask = sorted[i];
    const std::size_t count = j - i;
    i = j;
    if (std::popcount(mask) != budget) continue;
    double weight = 0.0;
    for (int b = 0; b < n; ++b)
      if ((mask >> b) & 1u) weight += weights[b];

    bool better = false;
    if (!found) {
      better = true;
    } else if (weight != best_weight) {
      better = weight > best_weight;
    } else if (count != best_count) {
      better = count > best_count;
    } else {
      // lexicographic on (z_0, ..., z_{n-1})
      for (int b = 0; b < n; ++b) {
        const unsigned mb = (mask >> b) & 1u;
        const unsigned bb = (best_mask >> b) & 1u;
        if (mb != bb) {
          better = mb < bb;
          break;
        }
      }
    }
    if (better) {
      found = true;
      best_mask = mask;
      best_weight = weight;
      best_count = count;
    }
  }

  if (!found) return top_k_mask(weights, budget);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
  for (int b = 0; b < n; ++b)
    bits[static_cast<std::size_t>(b)] =
        static_cast<std::uint8_t>((best_mask >> b) & 1u);
  return bits;
}

}  // namespace qsrf
