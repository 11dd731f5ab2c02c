#include "qsrf/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qsrf/rng.hpp"

namespace qsrf {
namespace {

Index nearest_centroid(const Eigen::Ref<const Matrix>& centroids,
                       const Eigen::Ref<const Vector>& point,
                       double* best_dist = nullptr) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.rows(); ++c) {
    double d = (centroids.row(c).transpose() - point).squaredNorm();
    if (d < best_d) {  // strict: ties stay with the lowest index
      best_d = d;
      best = c;
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

// k-means++ D^2 seeding over the given candidate rows.
Matrix kmeanspp_init(const Eigen::Ref<const Matrix>& points,
                     const std::vector<Index>& candidates, Index k,
                     std::mt19937_64& rng) {
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<std::size_t> first(0, candidates.size() - 1);
  centroids.row(0) = points.row(candidates[first(rng)]);

  Vector dist(static_cast<Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i)
    dist[static_cast<Index>(i)] =
        (points.row(candidates[i]) - centroids.row(0)).squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index c = 1; c < k; ++c) {
    double total = dist.sum();
    std::size_t chosen = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      double acc = 0.0;
      chosen = candidates.size() - 1;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        acc += dist[static_cast<Index>(i)];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      // All candidates coincide with chosen centroids; fall back to uniform.
      chosen = first(rng);
    }
    centroids.row(c) = points.row(candidates[chosen]);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double d = (points.row(candidates[i]) - centroids.row(c)).squaredNorm();
      dist[static_cast<Index>(i)] = std::min(dist[static_cast<Index>(i)], d);
    }
  }
  return centroids;
}

}  // namespace

std::vector<std::int32_t> assign(const Eigen::Ref<const Matrix>& points,
                                 const Eigen::Ref<const Matrix>& centroids) {
  if (points.cols() != centroids.cols())
    throw std::invalid_argument("assign: dimensionality mismatch");
  std::vector<std::int32_t> out(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i)
    out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(
        nearest_centroid(centroids, points.row(i).transpose()));
  return out;
}

double inertia(const Eigen::Ref<const Matrix>& points,
               const Eigen::Ref<const Matrix>& centroids,
               const std::vector<std::int32_t>& assignment) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)]))
                 .squaredNorm();
  return total;
}

Clustering minibatch_kmeans(const Eigen::Ref<const Matrix>& points, Index k,
                            const KMeansOptions& options, std::uint64_t seed) {
  const Index n = points.rows();
  if (k < 1 || k > n)
    throw std::invalid_argument("minibatch_kmeans: need 1 <= k <= rows");

  auto rng = make_rng(derive_seed(seed, stream::kKmeans));

  // Seeding subsample of 10k rows (all rows when the set is small).
  std::vector<Index> sample(static_cast<std::size_t>(n));
  std::iota(sample.begin(), sample.end(), Index{0});
  std::shuffle(sample.begin(), sample.end(), rng);
  const auto sample_size =
      std::min<std::size_t>(sample.size(),
                            std::max<std::size_t>(static_cast<std::size_t>(10 * k),
                                                  static_cast<std::size_t>(k)));
  sample.resize(sample_size);
  Matrix centroids = kmeanspp_init(points, sample, k, rng);

  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  std::uniform_int_distribution<Index> row_dist(0, n - 1);
  const Index batch = std::min(options.batch, n);

  std::vector<Index> batch_rows(static_cast<std::size_t>(batch));
  std::vector<Index> batch_centers(static_cast<std::size_t>(batch));
  for (int iter = 0; iter < options.iters; ++iter) {
    for (Index b = 0; b < batch; ++b)
      batch_rows[static_cast<std::size_t>(b)] = row_dist(rng);
    for (Index b = 0; b < batch; ++b)
      batch_centers[static_cast<std::size_t>(b)] = nearest_centroid(
          centroids, points.row(batch_rows[static_cast<std::size_t>(b)]).transpose());
    // Centroid updates are applied serially in batch order.
    for (Index b = 0; b < batch; ++b) {
      const Index c = batch_centers[static_cast<std::size_t>(b)];
      const double lr = 1.0 / static_cast<double>(++counts[static_cast<std::size_t>(c)]);
      centroids.row(c) +=
          lr * (points.row(batch_rows[static_cast<std::size_t>(b)]) - centroids.row(c));
    }
  }

  Clustering result;
  result.assignment = assign(points, centroids);

  // Re-seed empty clusters on the farthest-from-centroid point, repeating
  // until every cluster owns at least one row.
  for (Index repair = 0;; ++repair) {
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
    for (std::int32_t a : result.assignment) ++sizes[static_cast<std::size_t>(a)];
    Index empty = -1;
    for (Index c = 0; c < k; ++c)
      if (sizes[static_cast<std::size_t>(c)] == 0) {
        empty = c;
        break;
      }
    if (empty < 0) {
      result.sizes = std::move(sizes);
      break;
    }
    if (repair >= 4 * k) {
      // Degenerate duplicate-heavy data; hand each remaining empty cluster
      // one row from the currently largest cluster.
      for (Index c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Index donor = static_cast<Index>(std::distance(
            sizes.begin(), std::max_element(sizes.begin(), sizes.end())));
        for (Index i = 0; i < n; ++i)
          if (result.assignment[static_cast<std::size_t>(i)] == donor) {
            result.assignment[static_cast<std::size_t>(i)] =
                static_cast<std::int32_t>(c);
            centroids.row(c) = points.row(i);
            --sizes[static_cast<std::size_t>(donor)];
            ++sizes[static_cast<std::size_t>(c)];
            break;
          }
      }
      result.sizes = std::move(sizes);
      break;
    }
    Index farthest = 0;
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      double d = (points.row(i) -
                  centroids.row(result.assignment[static_cast<std::size_t>(i)]))
                     .squaredNorm();
      if (d > best) {
        best = d;
        farthest = i;
      }
    }
    centroids.row(empty) = points.row(farthest);
    result.assignment = assign(points, centroids);
    // Duplicate points can tie the re-seeded centroid with a lower-index
    // one and leave the cluster empty again; claim the seed point outright.
    result.assignment[static_cast<std::size_t>(farthest)] =
        static_cast<std::int32_t>(empty);
  }

  result.centroids = std::move(centroids);
  result.inertia = inertia(points, result.centroids, result.assignment);
  return result;
}

}  // namespace qsrf
