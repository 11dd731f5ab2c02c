#include "qsrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qsrf/parallel.hpp"
#include "qsrf/rng.hpp"

namespace qsrf {
namespace {

struct SplitChoice {
  bool found = false;
  std::int32_t feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

double gini(double n_pos, double n_total) {
  if (n_total <= 0.0) return 0.0;
  const double p = n_pos / n_total;
  return 2.0 * p * (1.0 - p);
}

// Best weighted-Gini split of `rows` over the candidate features; thresholds
// are midpoints between consecutive distinct sorted values. Ties resolve to
// the lowest feature index, then the lowest threshold.
SplitChoice best_split(const Eigen::Ref<const Matrix>& data,
                       const std::vector<int>& labels,
                       const std::vector<std::int32_t>& rows,
                       const std::vector<std::int32_t>& features,
                       int min_leaf) {
  SplitChoice best;
  const double total = static_cast<double>(rows.size());
  std::vector<std::pair<double, int>> column(rows.size());

  for (std::int32_t f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Index>(rows[i]);
      column[i] = {data(r, f), labels[static_cast<std::size_t>(rows[i])]};
    }
    std::sort(column.begin(), column.end());

    double pos_left = 0.0, pos_total = 0.0;
    for (const auto& [v, y] : column) pos_total += y;

    double left = 0.0;
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      left += 1.0;
      pos_left += column[i].second;
      if (column[i].first == column[i + 1].first) continue;
      if (left < min_leaf || total - left < min_leaf) continue;
      const double impurity =
          (left / total) * gini(pos_left, left) +
          ((total - left) / total) * gini(pos_total - pos_left, total - left);
      const double threshold = 0.5 * (column[i].first + column[i + 1].first);
      if (!best.found || impurity < best.impurity ||
          (impurity == best.impurity &&
           (f < best.feature ||
            (f == best.feature && threshold < best.threshold)))) {
        best.found = true;
        best.feature = f;
        best.threshold = threshold;
        best.impurity = impurity;
      }
    }
  }
  return best;
}

std::int32_t grow(const Eigen::Ref<const Matrix>& data,
                  const std::vector<int>& labels,
                  std::vector<std::int32_t>& rows,
                  const std::vector<std::int32_t>& features,
                  const TreeOptions& options, int depth, DecisionTree& tree) {
  double n_pos = 0.0;
  for (std::int32_t r : rows) n_pos += labels[static_cast<std::size_t>(r)];
  const double n_total = static_cast<double>(rows.size());

  const auto make_leaf = [&]() {
    DecisionTree::Node leaf;
    leaf.prob = n_total > 0.0 ? n_pos / n_total : 0.0;
    tree.nodes.push_back(leaf);
    return static_cast<std::int32_t>(tree.nodes.size() - 1);
  };

  if (depth >= options.max_depth || n_pos == 0.0 || n_pos == n_total ||
      rows.size() < 2 * static_cast<std::size_t>(options.min_leaf))
    return make_leaf();

  const SplitChoice split =
      best_split(data, labels, rows, features, options.min_leaf);
  if (!split.found) return make_leaf();

  std::vector<std::int32_t> left_rows, right_rows;
  for (std::int32_t r : rows) {
    if (data(r, split.feature) <= split.threshold)
      left_rows.push_back(r);
    else
      right_rows.push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();

  const auto node_id = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
  tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
  const std::int32_t left =
      grow(data, labels, left_rows, features, options, depth + 1, tree);
  const std::int32_t right =
      grow(data, labels, right_rows, features, options, depth + 1, tree);
  tree.nodes[static_cast<std::size_t>(node_id)].left = left;
  tree.nodes[static_cast<std::size_t>(node_id)].right = right;
  return node_id;
}

int depth_below(const DecisionTree& tree, std::int32_t node) {
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.feature < 0) return 0;
  return 1 + std::max(depth_below(tree, n.left), depth_below(tree, n.right));
}

}  // namespace

DecisionTree fit_tree(const Eigen::Ref<const Matrix>& rows,
                      const std::vector<int>& labels,
                      const TreeOptions& options,
                      const std::vector<std::int32_t>& feature_subset) {
  if (rows.rows() < 1) throw std::invalid_argument("fit_tree: no rows");
  if (static_cast<std::size_t>(rows.rows()) != labels.size())
    throw std::invalid_argument("fit_tree: labels size mismatch");

  std::vector<std::int32_t> features = feature_subset;
  if (features.empty()) {
    features.resize(static_cast<std::size_t>(rows.cols()));
    std::iota(features.begin(), features.end(), 0);
  }
  std::vector<std::int32_t> index(static_cast<std::size_t>(rows.rows()));
  std::iota(index.begin(), index.end(), 0);

  DecisionTree tree;
  grow(rows, labels, index, features, options, 0, tree);
  return tree;
}

double predict_tree(const DecisionTree& tree,
                    const Eigen::Ref<const Vector>& row) {
  std::int32_t node = 0;
  for (;;) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.feature < 0) return n.prob;
    node = row[n.feature] <= n.threshold ? n.left : n.right;
  }
}

int tree_depth(const DecisionTree& tree) {
  return tree.nodes.empty() ? 0 : depth_below(tree, 0);
}

Forest fit_forest(const Eigen::Ref<const Matrix>& rows,
                  const std::vector<int>& labels, const ForestOptions& options,
                  std::uint64_t seed) {
  if (options.trees < 1) throw std::invalid_argument("fit_forest: trees < 1");
  const Index n = rows.rows();
  const Index dim = rows.cols();

  Forest forest;
  forest.n_features = dim;
  forest.trees.resize(static_cast<std::size_t>(options.trees));
  forest.tree_seeds.resize(static_cast<std::size_t>(options.trees));
  for (int t = 0; t < options.trees; ++t)
    forest.tree_seeds[static_cast<std::size_t>(t)] =
        derive_seed(seed, stream::kForest, static_cast<std::uint64_t>(t));

  const auto subset_size = static_cast<Index>(
      std::max(1.0, std::ceil(std::sqrt(static_cast<double>(dim)))));

  TreeOptions tree_options{options.max_depth, options.min_leaf};
  parallel_chunks(options.trees, 1, options.threads, [&](Index begin, Index) {
    const auto t = static_cast<std::size_t>(begin);
    auto rng = make_rng(forest.tree_seeds[t]);

    std::uniform_int_distribution<Index> row_dist(0, n - 1);
    Matrix boot(n, dim);
    std::vector<int> boot_labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const Index r = row_dist(rng);
      boot.row(i) = rows.row(r);
      boot_labels[static_cast<std::size_t>(i)] =
          labels[static_cast<std::size_t>(r)];
    }

    std::vector<std::int32_t> all_features(static_cast<std::size_t>(dim));
    std::iota(all_features.begin(), all_features.end(), 0);
    std::shuffle(all_features.begin(), all_features.end(), rng);
    std::vector<std::int32_t> subset(
        all_features.begin(),
        all_features.begin() + static_cast<std::ptrdiff_t>(subset_size));
    std::sort(subset.begin(), subset.end());

    forest.trees[t] = fit_tree(boot, boot_labels, tree_options, subset);
  });
  return forest;
}

double predict_proba(const Forest& forest,
                     const Eigen::Ref<const Vector>& row) {
  if (row.size() != forest.n_features)
    throw std::invalid_argument("predict_proba: feature dimension mismatch");
  double acc = 0.0;
  for (const DecisionTree& tree : forest.trees) acc += predict_tree(tree, row);
  return acc / static_cast<double>(forest.trees.size());
}

void save_forest(const Forest& forest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write forest file: " + path);
  out.precision(17);
  out << "#trees=" << forest.trees.size() << " features=" << forest.n_features
      << "\n";
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const auto& nodes = forest.trees[t].nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.feature < 0)
        out << t << '\t' << i << '\t' << "leaf" << '\t' << n.prob << '\n';
      else
        out << t << '\t' << i << '\t' << "split" << '\t' << n.feature << ','
            << n.threshold << ',' << n.left << ',' << n.right << '\n';
    }
  }
}

Forest load_forest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open forest file: " + path);
  Forest forest;
  std::string line;
  long n_trees = -1, n_features = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::sscanf(line.c_str(), "#trees=%ld features=%ld", &n_trees,
                  &n_features);
      if (n_trees >= 0) {
        forest.trees.resize(static_cast<std::size_t>(n_trees));
        forest.n_features = n_features;
      }
      continue;
    }
    std::istringstream ls(line);
    long t, i;
    std::string kind;
    if (!(ls >> t >> i >> kind))
      throw std::runtime_error(path + ": bad forest line");
    auto& nodes = forest.trees[static_cast<std::size_t>(t)].nodes;
    if (nodes.size() <= static_cast<std::size_t>(i))
      nodes.resize(static_cast<std::size_t>(i) + 1);
    auto& node = nodes[static_cast<std::size_t>(i)];
    if (kind == "leaf") {
      ls >> node.prob;
      node.feature = -1;
    } else {
      std::string payload;
      ls >> payload;
      std::replace(payload.begin(), payload.end(), ',', ' ');
      std::istringstream ps(payload);
      long feature, left, right;
      double threshold;
      if (!(ps >> feature >> threshold >> left >> right))
        throw std::runtime_error(path + ": bad split payload");
      node.feature = static_cast<std::int32_t>(feature);
      node.threshold = threshold;
      node.left = static_cast<std::int32_t>(left);
      node.right = static_cast<std::int32_t>(right);
    }
  }
  if (n_trees < 0) throw std::runtime_error(path + ": missing forest header");
  return forest;
}

}  // namespace qsrf
