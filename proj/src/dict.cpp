#include "qsrf/dict.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qsrf/parallel.hpp"
#include "qsrf/rng.hpp"

namespace qsrf {
namespace {

constexpr double kPivotTol = 1e-10;   // Schur pivot below this => collinear atom
constexpr double kStepTol = 1e-14;    // minimum positive coefficient-cross step

struct PathState {
  std::vector<Index> active;
  std::vector<char> is_active;
  std::vector<char> excluded;  // collinear with the active set, kept off the path
};

// Cholesky of the active-set Gram; returns false when the candidate column
// would make it numerically singular.
bool try_activate(const Eigen::Ref<const Matrix>& gram, PathState& state,
                  Index j, Eigen::LLT<Matrix>& llt) {
  const auto n_active = static_cast<Index>(state.active.size());
  if (n_active == 0) {
    if (gram(j, j) < kPivotTol) return false;
  } else {
    Vector g(n_active);
    for (Index p = 0; p < n_active; ++p)
      g[p] = gram(state.active[static_cast<std::size_t>(p)], j);
    Vector solved = llt.solve(g);
    const double schur = gram(j, j) - g.dot(solved);
    if (schur < kPivotTol) return false;
  }
  state.active.push_back(j);
  state.is_active[static_cast<std::size_t>(j)] = 1;

  Matrix g_active(n_active + 1, n_active + 1);
  for (Index p = 0; p <= n_active; ++p)
    for (Index q = 0; q <= n_active; ++q)
      g_active(p, q) = gram(state.active[static_cast<std::size_t>(p)],
                            state.active[static_cast<std::size_t>(q)]);
  llt.compute(g_active);
  return llt.info() == Eigen::Success;
}

void refactor(const Eigen::Ref<const Matrix>& gram, const PathState& state,
              Eigen::LLT<Matrix>& llt) {
  const auto n_active = static_cast<Index>(state.active.size());
  Matrix g_active(n_active, n_active);
  for (Index p = 0; p < n_active; ++p)
    for (Index q = 0; q < n_active; ++q)
      g_active(p, q) = gram(state.active[static_cast<std::size_t>(p)],
                            state.active[static_cast<std::size_t>(q)]);
  llt.compute(g_active);
}

}  // namespace

Vector lasso_lars(const Eigen::Ref<const Matrix>& atoms,
                  const Eigen::Ref<const Matrix>& gram,
                  const Eigen::Ref<const Vector>& x, double lambda) {
  const Index n_atoms = atoms.cols();
  Vector theta = Vector::Zero(n_atoms);
  if (lambda < 0.0) throw std::invalid_argument("lasso_lars: lambda < 0");

  Vector residual = x;
  PathState state;
  state.is_active.assign(static_cast<std::size_t>(n_atoms), 0);
  state.excluded.assign(static_cast<std::size_t>(n_atoms), 0);
  Eigen::LLT<Matrix> llt;
  Index skip_rejoin = -1;  // atom dropped at the previous event

  const Index max_events = 8 * n_atoms + 32;
  for (Index event = 0; event < max_events; ++event) {
    Vector corr = atoms.transpose() * residual;

    if (state.active.empty()) {
      Index best = -1;
      double best_abs = lambda;
      for (Index j = 0; j < n_atoms; ++j) {
        if (state.excluded[static_cast<std::size_t>(j)] || j == skip_rejoin)
          continue;
        if (std::abs(corr[j]) > best_abs) {
          best_abs = std::abs(corr[j]);
          best = j;
        }
      }
      if (best < 0) break;  // max correlation already below lambda
      if (!try_activate(gram, state, best, llt)) {
        state.excluded[static_cast<std::size_t>(best)] = 1;
        continue;
      }
      skip_rejoin = -1;
      continue;
    }

    const auto n_active = static_cast<Index>(state.active.size());
    double lambda_cur = 0.0;
    Vector sign_active(n_active);
    for (Index p = 0; p < n_active; ++p) {
      const double c = corr[state.active[static_cast<std::size_t>(p)]];
      sign_active[p] = c >= 0.0 ? 1.0 : -1.0;
      lambda_cur = std::max(lambda_cur, std::abs(c));
    }
    if (lambda_cur <= lambda) break;

    const Vector w = llt.solve(sign_active);
    Vector dir = Vector::Zero(atoms.rows());
    for (Index p = 0; p < n_active; ++p)
      dir += w[p] * atoms.col(state.active[static_cast<std::size_t>(p)]);
    const Vector decay = atoms.transpose() * dir;  // d|c_j|/dt for each atom

    // Smallest event along the path: an inactive atom reaching the shrinking
    // correlation boundary, an active coefficient crossing zero, or lambda
    // reaching its target.
    double t_best = lambda_cur - lambda;
    int event_kind = 0;  // 0 target, 1 join, 2 cross
    Index event_atom = -1;
    for (Index j = 0; j < n_atoms; ++j) {
      if (state.is_active[static_cast<std::size_t>(j)] ||
          state.excluded[static_cast<std::size_t>(j)] || j == skip_rejoin)
        continue;
      const double denom_pos = 1.0 - decay[j];
      if (denom_pos > kPivotTol) {
        const double t = (lambda_cur - corr[j]) / denom_pos;
        if (t >= 0.0 && t < t_best) {
          t_best = t;
          event_kind = 1;
          event_atom = j;
        }
      }
      const double denom_neg = 1.0 + decay[j];
      if (denom_neg > kPivotTol) {
        const double t = (lambda_cur + corr[j]) / denom_neg;
        if (t >= 0.0 && t < t_best) {
          t_best = t;
          event_kind = 1;
          event_atom = j;
        }
      }
    }
    for (Index p = 0; p < n_active; ++p) {
      const Index i = state.active[static_cast<std::size_t>(p)];
      if (w[p] == 0.0) continue;
      const double t = -theta[i] / w[p];
      if (t > kStepTol && t < t_best) {
        t_best = t;
        event_kind = 2;
        event_atom = i;
      }
    }

    for (Index p = 0; p < n_active; ++p)
      theta[state.active[static_cast<std::size_t>(p)]] += t_best * w[p];
    residual -= t_best * dir;
    skip_rejoin = -1;

    if (event_kind == 0) break;
    if (event_kind == 2) {
      theta[event_atom] = 0.0;
      state.active.erase(std::find(state.active.begin(), state.active.end(),
                                   event_atom));
      state.is_active[static_cast<std::size_t>(event_atom)] = 0;
      refactor(gram, state, llt);
      skip_rejoin = event_atom;
    } else {
      if (!try_activate(gram, state, event_atom, llt))
        state.excluded[static_cast<std::size_t>(event_atom)] = 1;
    }
  }
  return theta;
}

SparseMatrix encode(const Eigen::Ref<const Matrix>& rows,
                    const Eigen::Ref<const Matrix>& atoms, double lambda,
                    int threads) {
  if (rows.cols() != atoms.rows())
    throw std::invalid_argument("encode: row dimension != atom dimension");
  const Index n = rows.rows();
  const Matrix gram = atoms.transpose() * atoms;

  const Index chunk = 128;
  const Index n_chunks = (n + chunk - 1) / chunk;
  std::vector<std::vector<Eigen::Triplet<double>>> per_chunk(
      static_cast<std::size_t>(n_chunks));
  parallel_chunks(n, chunk, threads, [&](Index begin, Index end) {
    auto& triplets = per_chunk[static_cast<std::size_t>(begin / chunk)];
    for (Index i = begin; i < end; ++i) {
      Vector theta = lasso_lars(atoms, gram, rows.row(i).transpose(), lambda);
      for (Index j = 0; j < theta.size(); ++j)
        if (theta[j] != 0.0) triplets.emplace_back(i, j, theta[j]);
    }
  });

  std::vector<Eigen::Triplet<double>> all;
  for (const auto& t : per_chunk) all.insert(all.end(), t.begin(), t.end());
  SparseMatrix codes(n, atoms.cols());
  codes.setFromTriplets(all.begin(), all.end());
  codes.makeCompressed();
  return codes;
}

double lasso_kkt_residual(const Eigen::Ref<const Matrix>& atoms,
                          const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& theta,
                          double lambda) {
  const Vector corr = atoms.transpose() * (x - atoms * theta);
  double worst = 0.0;
  for (Index j = 0; j < theta.size(); ++j) {
    if (theta[j] == 0.0)
      worst = std::max(worst, std::abs(corr[j]) - lambda);
    else
      worst = std::max(worst,
                       std::abs(corr[j] - lambda * (theta[j] > 0 ? 1.0 : -1.0)));
  }
  return std::max(worst, 0.0);
}

double lasso_objective(const Eigen::Ref<const Matrix>& atoms,
                       const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& theta, double lambda) {
  return 0.5 * (x - atoms * theta).squaredNorm() +
         lambda * theta.lpNorm<1>();
}

DictLearnResult learn_subdictionary(const Eigen::Ref<const Matrix>& rows,
                                    const DictLearnOptions& options,
                                    std::uint64_t seed) {
  const Index n = rows.rows();
  const Index dim = rows.cols();
  if (n < 1) throw std::invalid_argument("learn_subdictionary: no rows");
  const Index n_atoms = std::min<Index>(options.atoms, n);
  if (n_atoms < options.atoms)
    std::fprintf(stderr,
                 "[dict] cluster has %lld rows < %lld atoms; learning %lld\n",
                 static_cast<long long>(n),
                 static_cast<long long>(options.atoms),
                 static_cast<long long>(n_atoms));

  auto rng = make_rng(derive_seed(seed, stream::kDict));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  // Initial atoms: distinct data rows, unit-normalized; degenerate rows get
  // Gaussian directions.
  Matrix atoms(dim, n_atoms);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index j = 0; j < n_atoms; ++j) {
    Vector v = rows.row(order[static_cast<std::size_t>(j)]).transpose();
    double norm = v.norm();
    while (norm < 1e-12) {
      for (Index i = 0; i < dim; ++i) v[i] = normal(rng);
      norm = v.norm();
    }
    atoms.col(j) = v / norm;
  }

  // Fixed monitor batch: the objective trace and the final MSE are measured
  // here across all epochs.
  const Index monitor_size = std::min(n, options.batch);
  std::vector<Index> monitor(order.begin(),
                             order.begin() + static_cast<std::ptrdiff_t>(monitor_size));
  Matrix monitor_rows(monitor_size, dim);
  for (Index i = 0; i < monitor_size; ++i)
    monitor_rows.row(i) = rows.row(monitor[static_cast<std::size_t>(i)]);

  double lambda = options.lambda;
  if (lambda <= 0.0) {
    double acc = 0.0;
    for (Index i = 0; i < monitor_size; ++i)
      acc += (atoms.transpose() * monitor_rows.row(i).transpose())
                 .cwiseAbs()
                 .maxCoeff();
    lambda = 0.1 * acc / static_cast<double>(monitor_size);
    if (lambda <= 0.0) lambda = 1e-3;
  }

  DictLearnResult result;
  result.lambda = lambda;
  Matrix best_atoms = atoms;
  double best_objective = std::numeric_limits<double>::infinity();

  const Index batch = std::min(options.batch, n);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    auto epoch_rng = make_rng(derive_seed(seed, stream::kDict,
                                          static_cast<std::uint64_t>(epoch) + 1));
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), epoch_rng);

    std::vector<char> used(static_cast<std::size_t>(n_atoms), 0);
    for (Index start = 0; start < n; start += batch) {
      const Index stop = std::min(n, start + batch);
      Matrix chunk(stop - start, dim);
      for (Index i = start; i < stop; ++i)
        chunk.row(i - start) = rows.row(perm[static_cast<std::size_t>(i)]);

      SparseMatrix codes = encode(chunk, atoms, lambda, options.threads);
      Matrix code_gram = Matrix(codes.transpose() * codes);          // A x A
      Matrix data_corr = Matrix(chunk.transpose() * codes);          // dim x A

      // Sequential block-coordinate pass: each atom solves its per-atom
      // least squares on the exclude-self residual, then renormalizes.
      for (Index j = 0; j < n_atoms; ++j) {
        const double activation = code_gram(j, j);
        if (activation <= 1e-12) continue;
        used[static_cast<std::size_t>(j)] = 1;
        Vector u = atoms.col(j) +
                   (data_corr.col(j) - atoms * code_gram.col(j)) / activation;
        const double norm = u.norm();
        if (norm > 1e-12) atoms.col(j) = u / norm;
      }
    }

    // Re-seed atoms that never activated this epoch on the monitor rows
    // with the largest residuals.
    bool any_unused = false;
    for (char u : used) any_unused |= (u == 0);
    if (any_unused) {
      SparseMatrix mcodes = encode(monitor_rows, atoms, lambda, options.threads);
      Matrix resid = monitor_rows - mcodes * atoms.transpose();
      std::vector<Index> by_residual(static_cast<std::size_t>(monitor_size));
      std::iota(by_residual.begin(), by_residual.end(), Index{0});
      std::stable_sort(by_residual.begin(), by_residual.end(),
                       [&](Index a, Index b) {
                         return resid.row(a).squaredNorm() >
                                resid.row(b).squaredNorm();
                       });
      std::size_t next = 0;
      for (Index j = 0; j < n_atoms; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        while (next < by_residual.size()) {
          Vector v = monitor_rows.row(by_residual[next++]).transpose();
          if (v.norm() > 1e-12) {
            atoms.col(j) = v / v.norm();
            break;
          }
        }
      }
    }

    SparseMatrix mcodes = encode(monitor_rows, atoms, lambda, options.threads);
    const double recon =
        0.5 * (monitor_rows - mcodes * atoms.transpose()).squaredNorm();
    double l1 = 0.0;
    for (Index i = 0; i < mcodes.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(mcodes, i); it; ++it)
        l1 += std::abs(it.value());
    const double objective = recon + lambda * l1;
    result.objective_trace.push_back(objective);
    if (objective < best_objective) {
      best_objective = objective;
      best_atoms = atoms;
    }
  }

  result.atoms = std::move(best_atoms);
  SparseMatrix mcodes = encode(monitor_rows, result.atoms, lambda, options.threads);
  result.final_mse = reconstruction_mse(monitor_rows, result.atoms, mcodes);
  return result;
}

Matrix fine_tune_atoms(const Eigen::Ref<const Matrix>& rows,
                       const Eigen::Ref<const Matrix>& atoms, double lambda,
                       int epochs, std::uint64_t seed, int threads) {
  Matrix tuned = atoms;
  const Index n = rows.rows();
  const Index n_atoms = tuned.cols();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    auto rng = make_rng(derive_seed(seed, stream::kDict,
                                    0x77000000ULL + static_cast<std::uint64_t>(epoch)));
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const Index batch = std::min<Index>(2048, n);
    for (Index start = 0; start < n; start += batch) {
      const Index stop = std::min(n, start + batch);
      Matrix chunk(stop - start, rows.cols());
      for (Index i = start; i < stop; ++i)
        chunk.row(i - start) = rows.row(perm[static_cast<std::size_t>(i)]);

      SparseMatrix codes = encode(chunk, tuned, lambda, threads);
      Matrix code_gram = Matrix(codes.transpose() * codes);
      Matrix data_corr = Matrix(chunk.transpose() * codes);
      for (Index j = 0; j < n_atoms; ++j) {
        const double activation = code_gram(j, j);
        if (activation <= 1e-12) continue;
        Vector u = tuned.col(j) +
                   (data_corr.col(j) - tuned * code_gram.col(j)) / activation;
        const double norm = u.norm();
        if (norm > 1e-12) tuned.col(j) = u / norm;
      }
    }
  }
  return tuned;
}

Dictionary concat_dictionary(const std::vector<Matrix>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_dictionary: no parts");
  const Index dim = parts.front().rows();
  Index total = 0;
  for (const Matrix& p : parts) {
    if (p.rows() != dim)
      throw std::invalid_argument("concat_dictionary: row dimension mismatch");
    total += p.cols();
  }
  Dictionary dict;
  dict.atoms.resize(dim, total);
  dict.provenance.reserve(static_cast<std::size_t>(total));
  Index col = 0;
  for (std::size_t c = 0; c < parts.size(); ++c) {
    for (Index j = 0; j < parts[c].cols(); ++j, ++col) {
      dict.atoms.col(col) = parts[c].col(j);
      dict.provenance.emplace_back(static_cast<std::int32_t>(c),
                                   static_cast<std::int32_t>(j));
    }
  }
  return dict;
}

double reconstruction_mse(const Eigen::Ref<const Matrix>& rows,
                          const Eigen::Ref<const Matrix>& atoms,
                          const SparseMatrix& codes) {
  if (codes.rows() != rows.rows() || codes.cols() != atoms.cols() ||
      atoms.rows() != rows.cols())
    throw std::invalid_argument("reconstruction_mse: shape mismatch");
  const Matrix resid = rows - codes * atoms.transpose();
  return resid.squaredNorm() /
         (static_cast<double>(rows.rows()) * static_cast<double>(rows.cols()));
}

void save_dictionary(const Dictionary& dict, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dictionary file: " + path);
  out.precision(17);
  out << "#rows=" << dict.atoms.rows() << " atoms=" << dict.atoms.cols() << "\n";
  for (Index j = 0; j < dict.atoms.cols(); ++j)
    for (Index i = 0; i < dict.atoms.rows(); ++i)
      if (dict.atoms(i, j) != 0.0)
        out << i << '\t' << j << '\t' << dict.atoms(i, j) << '\n';
  out << "#provenance\n";
  for (std::size_t a = 0; a < dict.provenance.size(); ++a)
    out << a << '\t' << dict.provenance[a].first << '\t'
        << dict.provenance[a].second << '\n';
}

Dictionary load_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dictionary file: " + path);
  std::string line;
  long rows = -1, atoms = -1;
  bool in_provenance = false;
  Dictionary dict;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#provenance", 0) == 0) {
        in_provenance = true;
        dict.provenance.assign(static_cast<std::size_t>(atoms), {0, 0});
        continue;
      }
      std::sscanf(line.c_str(), "#rows=%ld atoms=%ld", &rows, &atoms);
      if (rows >= 0 && atoms >= 0) dict.atoms = Matrix::Zero(rows, atoms);
      continue;
    }
    std::istringstream ls(line);
    if (!in_provenance) {
      long i, j;
      double v;
      if (!(ls >> i >> j >> v))
        throw std::runtime_error(path + ": bad dictionary line " +
                                 std::to_string(line_no));
      dict.atoms(i, j) = v;
    } else {
      long a, cluster, local;
      if (!(ls >> a >> cluster >> local))
        throw std::runtime_error(path + ": bad provenance line " +
                                 std::to_string(line_no));
      dict.provenance[static_cast<std::size_t>(a)] = {
          static_cast<std::int32_t>(cluster), static_cast<std::int32_t>(local)};
    }
  }
  if (rows < 0 || atoms < 0)
    throw std::runtime_error(path + ": missing dictionary header");
  return dict;
}

}  // namespace qsrf
