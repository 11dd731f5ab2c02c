#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsrf/types.hpp"

namespace qsrf {

/// Depth-limited binary decision tree. Internal nodes carry (feature,
/// threshold, children); leaves carry the positive-class fraction.
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double prob = 0.0;
  };
  std::vector<Node> nodes;  // nodes[0] is the root
};

struct TreeOptions {
  int max_depth = 8;
  int min_leaf = 5;
};

/// Greedy Gini-impurity training restricted to `feature_subset` (empty means
/// all features). Candidate thresholds are midpoints between consecutive
/// sorted unique feature values; both children of a split must keep at least
/// min_leaf rows. Single-class input yields a depth-0 leaf.
DecisionTree fit_tree(const Eigen::Ref<const Matrix>& rows,
                      const std::vector<int>& labels,
                      const TreeOptions& options,
                      const std::vector<std::int32_t>& feature_subset = {});

double predict_tree(const DecisionTree& tree,
                    const Eigen::Ref<const Vector>& row);

int tree_depth(const DecisionTree& tree);

struct ForestOptions {
  int trees = 100;
  int max_depth = 8;
  int min_leaf = 5;
  int threads = 1;
};

/// Bagged ensemble: every tree trains on a with-replacement bootstrap of all
/// rows and a random feature subset of size max(1, ceil(sqrt(dim))).
/// Reproducible from (data, seed) regardless of thread count.
struct Forest {
  std::vector<DecisionTree> trees;
  std::vector<std::uint64_t> tree_seeds;
  Index n_features = 0;
};

Forest fit_forest(const Eigen::Ref<const Matrix>& rows,
                  const std::vector<int>& labels, const ForestOptions& options,
                  std::uint64_t seed);

/// Arithmetic mean of the tree outputs. Throws on dimension mismatch.
double predict_proba(const Forest& forest, const Eigen::Ref<const Vector>& row);

/// Text persistence, one line per node: `tree<TAB>node<TAB>kind<TAB>payload`.
void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

}  // namespace qsrf
