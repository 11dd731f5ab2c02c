#include "qsrf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <array>
#include <set>
#include <stdexcept>

#include "qsrf/rng.hpp"

namespace qsrf {

SyntheticData gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const std::int32_t tag_budget = spec.centroid_pool + spec.style_pool +
                                  spec.signal_atoms * spec.tags_per_signal;
  if (tag_budget > spec.tags)
    throw std::invalid_argument("gen_synthetic: tag pools exceed tag count");
  if (spec.signal_atoms > spec.clusters)
    throw std::invalid_argument("gen_synthetic: more signal atoms than clusters");

  auto rng = make_rng(derive_seed(seed, stream::kSynthetic));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Tag pool boundaries: [0, centroid_pool) identity tags,
  // [centroid_pool, +style_pool) style tags, then signal blocks, then rare.
  const std::int32_t style_begin = spec.centroid_pool;
  const std::int32_t signal_begin = style_begin + spec.style_pool;
  const std::int32_t rare_begin =
      signal_begin + spec.signal_atoms * spec.tags_per_signal;

  // Every cluster owns a fixed subset of the centroid pool.
  std::vector<std::vector<std::int32_t>> centroid_tags(
      static_cast<std::size_t>(spec.clusters));
  {
    std::vector<std::int32_t> pool(static_cast<std::size_t>(spec.centroid_pool));
    std::iota(pool.begin(), pool.end(), 0);
    for (auto& tags : centroid_tags) {
      std::shuffle(pool.begin(), pool.end(), rng);
      tags.assign(pool.begin(),
                  pool.begin() + std::min<std::ptrdiff_t>(
                                     spec.tags_per_centroid,
                                     static_cast<std::ptrdiff_t>(pool.size())));
      std::sort(tags.begin(), tags.end());
    }
  }

  SyntheticData data;
  data.item_cluster.resize(static_cast<std::size_t>(spec.items));
  data.item_grade.assign(static_cast<std::size_t>(spec.items), 0.0);

  std::vector<Eigen::Triplet<double>> triplets;
  std::uniform_real_distribution<double> grade_dist(spec.grade_floor, 1.0);
  for (std::int32_t i = 0; i < spec.items; ++i) {
    const std::int32_t c = i % spec.clusters;
    data.item_cluster[static_cast<std::size_t>(i)] = c;

    std::set<std::int32_t> active;
    for (std::int32_t t : centroid_tags[static_cast<std::size_t>(c)])
      active.insert(t);
    for (std::int32_t t = style_begin; t < signal_begin; ++t)
      if (unit(rng) < spec.style_prob) active.insert(t);
    if (c < spec.signal_atoms && unit(rng) < spec.signal_active_prob) {
      const double grade = grade_dist(rng);
      data.item_grade[static_cast<std::size_t>(i)] = grade;
      const std::int32_t block = signal_begin + c * spec.tags_per_signal;
      for (std::int32_t t = 0; t < spec.tags_per_signal; ++t)
        if (unit(rng) < grade) active.insert(block + t);
    }
    for (std::int32_t t = rare_begin; t < spec.tags; ++t)
      if (unit(rng) < spec.rare_prob) active.insert(t);

    for (std::int32_t t : active) triplets.emplace_back(i, t, 1.0);
  }
  data.tags = SparseMatrix(spec.items, spec.tags);
  data.tags.setFromTriplets(triplets.begin(), triplets.end());
  data.tags.makeCompressed();

  // Clicks: graded inside the preferred signal cluster, uniform elsewhere.
  std::set<std::pair<std::int32_t, std::int32_t>> clicks;
  std::uniform_int_distribution<std::int32_t> any_item(0, spec.items - 1);
  for (std::int32_t u = 0; u < spec.users; ++u) {
    const std::int32_t preferred = u % spec.signal_atoms;
    for (std::int32_t i = preferred; i < spec.items; i += spec.clusters) {
      const double grade = data.item_grade[static_cast<std::size_t>(i)];
      if (grade > 0.0 &&
          unit(rng) < spec.click_scale * std::pow(grade, spec.click_power))
        clicks.insert({u, i});
    }
    for (std::int32_t b = 0; b < spec.background_clicks; ++b)
      clicks.insert({u, any_item(rng)});
    // Degenerate users would starve the split; top the count up to two.
    int guard = 64;
    while (guard-- > 0) {
      std::int32_t have = 0;
      for (auto it = clicks.lower_bound({u, 0});
           it != clicks.end() && it->first == u; ++it)
        ++have;
      if (have >= 2) break;
      clicks.insert({u, any_item(rng)});
    }
  }

  data.log.n_users = spec.users;
  data.log.n_items = spec.items;
  data.log.entries.reserve(clicks.size());
  for (const auto& [u, i] : clicks) data.log.entries.push_back({u, i});

  // Planted directions expressed in the tf-idf geometry the pipeline sees:
  // idf-weighted indicators of each signal tag block, unit norm.
  Vector df = Vector::Zero(spec.tags);
  for (Index i = 0; i < data.tags.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(data.tags, i); it; ++it)
      df[it.col()] += 1.0;
  data.planted_signal = Matrix::Zero(spec.tags, spec.signal_atoms);
  for (std::int32_t a = 0; a < spec.signal_atoms; ++a) {
    const std::int32_t block = signal_begin + a * spec.tags_per_signal;
    for (std::int32_t t = 0; t < spec.tags_per_signal; ++t) {
      const std::int32_t col = block + t;
      data.planted_signal(col, a) =
          std::log((1.0 + spec.items) / (1.0 + df[col])) + 1.0;
    }
    data.planted_signal.col(a).normalize();
  }
  return data;
}

Matrix gen_low_rank(Index rows, Index cols, Index rank, double noise_energy,
                    std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, stream::kSynthetic, 0x10));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix left(rows, rank), right(cols, rank);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < rank; ++j) left(i, j) = normal(rng);
  for (Index i = 0; i < cols; ++i)
    for (Index j = 0; j < rank; ++j) right(i, j) = normal(rng);
  Matrix signal = left * right.transpose();

  Matrix noise(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) noise(i, j) = normal(rng);
  const double scale =
      std::sqrt(noise_energy * signal.squaredNorm() / noise.squaredNorm());
  return signal + scale * noise;
}

std::vector<double> match_planted(const Eigen::Ref<const Matrix>& planted,
                                  const Eigen::Ref<const Matrix>& atoms) {
  const Index n_planted = planted.cols();
  const Index n_atoms = atoms.cols();
  Matrix cosines(n_planted, n_atoms);
  for (Index p = 0; p < n_planted; ++p) {
    const double pn = planted.col(p).norm();
    for (Index a = 0; a < n_atoms; ++a) {
      const double an = atoms.col(a).norm();
      cosines(p, a) = (pn > 0 && an > 0)
                          ? std::abs(planted.col(p).dot(atoms.col(a))) / (pn * an)
                          : 0.0;
    }
  }

  std::vector<double> matched(static_cast<std::size_t>(n_planted), 0.0);
  std::vector<char> planted_used(static_cast<std::size_t>(n_planted), 0);
  std::vector<char> atom_used(static_cast<std::size_t>(n_atoms), 0);
  for (Index step = 0; step < std::min(n_planted, n_atoms); ++step) {
    Index best_p = -1, best_a = -1;
    double best = -1.0;
    for (Index p = 0; p < n_planted; ++p) {
      if (planted_used[static_cast<std::size_t>(p)]) continue;
      for (Index a = 0; a < n_atoms; ++a) {
        if (atom_used[static_cast<std::size_t>(a)]) continue;
        if (cosines(p, a) > best) {
          best = cosines(p, a);
          best_p = p;
          best_a = a;
        }
      }
    }
    planted_used[static_cast<std::size_t>(best_p)] = 1;
    atom_used[static_cast<std::size_t>(best_a)] = 1;
    matched[static_cast<std::size_t>(best_p)] = best;
  }
  return matched;
}

}  // namespace qsrf
