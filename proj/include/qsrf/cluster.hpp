#pragma once

#include <cstdint>
#include <vector>

#include "qsrf/types.hpp"

namespace qsrf {

struct Clustering {
  Matrix centroids;                     // k x dim
  std::vector<std::int32_t> assignment; // one cluster id per row
  std::vector<std::int64_t> sizes;      // rows per cluster, sums to n
  double inertia = 0.0;                 // full-set sum of squared distances
};

struct KMeansOptions {
  Index batch = 2048;
  int iters = 100;
};

/// Nearest-centroid assignment in Euclidean distance, ties to the lowest
/// centroid index.
std::vector<std::int32_t> assign(const Eigen::Ref<const Matrix>& points,
                                 const Eigen::Ref<const Matrix>& centroids);

double inertia(const Eigen::Ref<const Matrix>& points,
               const Eigen::Ref<const Matrix>& centroids,
               const std::vector<std::int32_t>& assignment);

/// Mini-batch k-means with k-means++ seeding on a 10k-row subsample and
/// per-center learning rate 1/(cumulative count). Empty clusters after the
/// final full assignment are re-seeded on the point farthest from its
/// centroid. Deterministic per seed. Throws when k > rows.
Clustering minibatch_kmeans(const Eigen::Ref<const Matrix>& points, Index k,
                            const KMeansOptions& options, std::uint64_t seed);

}  // namespace qsrf
