#include "qsrf/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qsrf/forest.hpp"
#include "qsrf/importance.hpp"
#include "qsrf/parallel.hpp"
#include "qsrf/qaoa.hpp"
#include "qsrf/rng.hpp"
#include "qsrf/sketch.hpp"

namespace qsrf {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
T parse_number(const std::string& value) {
  std::istringstream is(value);
  T out;
  if (!(is >> out)) throw std::invalid_argument("bad numeric value: " + value);
  return out;
}

// A scorer over (user, item) pairs; the aggregate mode holds one forest on
// the final codes, the per-round mode pools every round's trees on that
// round's own codes.
struct PairScorer {
  struct Part {
    Forest forest;
    Matrix item_codes;  // items x budget
    Matrix profiles;    // users x budget
  };
  std::vector<Part> parts;
  std::int64_t total_trees = 0;

  double operator()(std::int32_t user, std::int32_t item) const {
    double acc = 0.0;
    for (const Part& part : parts) {
      const Vector features = part.profiles.row(user)
                                  .cwiseProduct(part.item_codes.row(item))
                                  .transpose();
      for (const DecisionTree& tree : part.forest.trees)
        acc += predict_tree(tree, features);
    }
    return acc / static_cast<double>(total_trees);
  }
};

Matrix user_profiles(const Matrix& item_codes,
                     const std::vector<std::vector<std::int32_t>>& train_items,
                     std::int32_t n_users) {
  Matrix profiles = Matrix::Zero(n_users, item_codes.cols());
  for (std::int32_t u = 0; u < n_users; ++u)
    for (std::int32_t item : train_items[static_cast<std::size_t>(u)])
      profiles.row(u) += item_codes.row(item);
  return profiles;
}

PairScorer::Part train_forest_part(
    const PipelineConfig& config, const InteractionLog& log,
    const Split& split, const Matrix& item_codes, int n_trees,
    std::uint64_t seed, int threads) {
  PairScorer::Part part;
  part.item_codes = item_codes;
  auto train_items = items_by_user(log, split.train);
  auto valid_items = items_by_user(log, split.valid);
  part.profiles = user_profiles(item_codes, train_items, log.n_users);

  // Positives are the training clicks; negatives are sampled per user from
  // items unseen in train+valid at the configured ratio.
  std::vector<Vector> features;
  std::vector<int> labels;
  features.reserve(2 * split.train.rows.size());
  for (std::int32_t u = 0; u < log.n_users; ++u) {
    const auto& items = train_items[static_cast<std::size_t>(u)];
    if (items.empty()) continue;
    for (std::int32_t item : items) {
      features.push_back(part.profiles.row(u)
                             .cwiseProduct(part.item_codes.row(item))
                             .transpose());
      labels.push_back(1);
    }
    std::vector<std::int32_t> avoid = items;
    const auto& vi = valid_items[static_cast<std::size_t>(u)];
    avoid.insert(avoid.end(), vi.begin(), vi.end());
    std::sort(avoid.begin(), avoid.end());
    const int want = static_cast<int>(std::lround(
        config.train_neg_ratio * static_cast<double>(items.size())));
    for (std::int32_t item : sample_unclicked(
             log.n_items, avoid, want,
             derive_seed(seed, stream::kNegatives,
                         0xF0000000ULL + static_cast<std::uint64_t>(u)))) {
      features.push_back(part.profiles.row(u)
                             .cwiseProduct(part.item_codes.row(item))
                             .transpose());
      labels.push_back(0);
    }
  }

  Matrix rows(static_cast<Index>(features.size()), item_codes.cols());
  for (std::size_t i = 0; i < features.size(); ++i)
    rows.row(static_cast<Index>(i)) = features[i].transpose();

  ForestOptions options;
  options.trees = n_trees;
  options.max_depth = config.tree_depth;
  options.min_leaf = config.min_leaf;
  options.threads = threads;
  part.forest = fit_forest(rows, labels, options, seed);
  return part;
}

double auto_lambda(const Matrix& rows, const Matrix& atoms, Index batch,
                   std::uint64_t seed) {
  const Index n = rows.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const Index take = std::min(batch, n);
  double acc = 0.0;
  for (Index i = 0; i < take; ++i)
    acc += (atoms.transpose() *
            rows.row(order[static_cast<std::size_t>(i)]).transpose())
               .cwiseAbs()
               .maxCoeff();
  const double lambda = 0.1 * acc / static_cast<double>(take);
  return lambda > 0.0 ? lambda : 1e-3;
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  PipelineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (!value.empty() && value.back() == '\r') value.pop_back();
    config.set(key, value);
  }
  return config;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "interactions") interactions = value;
  else if (key == "icm") icm = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "seed") seed = parse_number<std::uint64_t>(value);
  else if (key == "repeats") repeats = parse_number<int>(value);
  else if (key == "synth_users") synth_users = parse_number<std::int32_t>(value);
  else if (key == "synth_items") synth_items = parse_number<std::int32_t>(value);
  else if (key == "synth_tags") synth_tags = parse_number<std::int32_t>(value);
  else if (key == "svd_rank") svd_rank = parse_number<Index>(value);
  else if (key == "svd_oversample") svd_oversample = parse_number<Index>(value);
  else if (key == "svd_power_iters") svd_power_iters = parse_number<int>(value);
  else if (key == "clusters") clusters = parse_number<Index>(value);
  else if (key == "kmeans_batch") kmeans_batch = parse_number<Index>(value);
  else if (key == "kmeans_iters") kmeans_iters = parse_number<int>(value);
  else if (key == "atoms_per_cluster") atoms_per_cluster = parse_number<Index>(value);
  else if (key == "lambda") lambda = parse_number<double>(value);
  else if (key == "dict_epochs") dict_epochs = parse_number<int>(value);
  else if (key == "dict_batch") dict_batch = parse_number<Index>(value);
  else if (key == "bootstrap_fraction") bootstrap_fraction = parse_number<double>(value);
  else if (key == "k_top") k_top = parse_number<int>(value);
  else if (key == "pool_negatives") pool_negatives = parse_number<int>(value);
  else if (key == "budget") budget = parse_number<int>(value);
  else if (key == "penalty") penalty = parse_number<double>(value);
  else if (key == "qubo_form") qubo_form = value;
  else if (key == "qaoa_depth") qaoa_depth = parse_number<int>(value);
  else if (key == "qaoa_shots") qaoa_shots = parse_number<int>(value);
  else if (key == "qaoa_final_shots") qaoa_final_shots = parse_number<int>(value);
  else if (key == "qaoa_iters") qaoa_iters = parse_number<int>(value);
  else if (key == "qaoa_qubits") qaoa_qubits = parse_number<int>(value);
  else if (key == "rounds") rounds = parse_number<int>(value);
  else if (key == "trees") trees = parse_number<int>(value);
  else if (key == "tree_depth") tree_depth = parse_number<int>(value);
  else if (key == "min_leaf") min_leaf = parse_number<int>(value);
  else if (key == "train_neg_ratio") train_neg_ratio = parse_number<double>(value);
  else if (key == "forest_per_round") forest_per_round = (value == "1" || value == "true");
  else if (key == "ndcg_k") ndcg_k = parse_number<int>(value);
  else if (key == "eval_pool_negatives") eval_pool_negatives = parse_number<int>(value);
  else if (key == "threads") threads = parse_number<int>(value);
  else throw std::invalid_argument("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  auto str = [](auto v) { return std::to_string(v); };
  std::ostringstream lam, pen, frac, ratio;
  lam.precision(17); lam << lambda;
  pen.precision(17); pen << penalty;
  frac.precision(17); frac << bootstrap_fraction;
  ratio.precision(17); ratio << train_neg_ratio;
  return {
      {"interactions", interactions},
      {"icm", icm},
      {"out_dir", out_dir},
      {"seed", str(seed)},
      {"repeats", str(repeats)},
      {"synth_users", str(synth_users)},
      {"synth_items", str(synth_items)},
      {"synth_tags", str(synth_tags)},
      {"svd_rank", str(svd_rank)},
      {"svd_oversample", str(svd_oversample)},
      {"svd_power_iters", str(svd_power_iters)},
      {"clusters", str(clusters)},
      {"kmeans_batch", str(kmeans_batch)},
      {"kmeans_iters", str(kmeans_iters)},
      {"atoms_per_cluster", str(atoms_per_cluster)},
      {"lambda", lam.str()},
      {"dict_epochs", str(dict_epochs)},
      {"dict_batch", str(dict_batch)},
      {"bootstrap_fraction", frac.str()},
      {"k_top", str(k_top)},
      {"pool_negatives", str(pool_negatives)},
      {"budget", str(budget)},
      {"penalty", pen.str()},
      {"qubo_form", qubo_form},
      {"qaoa_depth", str(qaoa_depth)},
      {"qaoa_shots", str(qaoa_shots)},
      {"qaoa_final_shots", str(qaoa_final_shots)},
      {"qaoa_iters", str(qaoa_iters)},
      {"qaoa_qubits", str(qaoa_qubits)},
      {"rounds", str(rounds)},
      {"trees", str(trees)},
      {"tree_depth", str(tree_depth)},
      {"min_leaf", str(min_leaf)},
      {"train_neg_ratio", ratio.str()},
      {"forest_per_round", forest_per_round ? "1" : "0"},
      {"ndcg_k", str(ndcg_k)},
      {"eval_pool_negatives", str(eval_pool_negatives)},
      {"threads", str(threads)},
  };
}

void PipelineConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  for (const auto& [key, value] : entries()) out << key << '=' << value << '\n';
}

std::vector<std::int32_t> aggregate_selections(
    const std::vector<std::vector<std::int32_t>>& masks, int k,
    const Eigen::Ref<const Vector>& mean_weights) {
  if (masks.empty()) throw std::invalid_argument("aggregate_selections: no masks");
  std::map<std::int32_t, std::int32_t> frequency;
  for (const auto& mask : masks)
    for (std::int32_t atom : mask) ++frequency[atom];

  std::vector<std::pair<std::int32_t, std::int32_t>> ranked(frequency.begin(),
                                                            frequency.end());
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    const double wa = mean_weights[a.first];
    const double wb = mean_weights[b.first];
    if (wa != wb) return wa > wb;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) < k)
    throw std::invalid_argument("aggregate_selections: fewer selected atoms than k");
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(ranked[static_cast<std::size_t>(i)].first);
  std::sort(out.begin(), out.end());
  return out;
}

RoundResult run_bootstrap_round(int round_index, const PipelineConfig& config,
                                const RoundContext& context,
                                std::uint64_t repeat_seed,
                                Vector* weights_out) {
  const std::uint64_t seed_r =
      derive_seed(repeat_seed, stream::kRound,
                  static_cast<std::uint64_t>(round_index));
  const InteractionLog& log = *context.log;
  const Split& split = *context.split;
  RoundResult round;

  ImportanceOptions importance_options;
  importance_options.bootstrap_fraction = config.bootstrap_fraction;
  importance_options.k_cutoff = config.ndcg_k;
  importance_options.pool_negatives = config.pool_negatives;
  importance_options.threads = 1;
  AtomWeights weights =
      delta_ndcg_weights(*context.codes, log, split.train, split.valid,
                         importance_options, seed_r);
  if (weights_out) *weights_out = weights.weights;

  const int n_qubits = std::min(config.k_top, config.qaoa_qubits);
  round.candidates = select_candidates(weights.weights, config.k_top);
  const std::vector<std::int32_t> qubo_atoms =
      select_candidates(weights.weights, n_qubits);
  round.candidate_weights.resize(static_cast<Index>(round.candidates.size()));
  for (std::size_t i = 0; i < round.candidates.size(); ++i)
    round.candidate_weights[static_cast<Index>(i)] =
        weights.weights[round.candidates[i]];

  Vector qubo_weights(static_cast<Index>(qubo_atoms.size()));
  for (std::size_t i = 0; i < qubo_atoms.size(); ++i)
    qubo_weights[static_cast<Index>(i)] = weights.weights[qubo_atoms[i]];

  const QuboProblem problem =
      build_qubo(qubo_weights, config.budget, config.penalty,
                 qubo_form_from_string(config.qubo_form));
  const CostDiagonal diagonal = precompute_diagonal(problem);
  SpsaOptions spsa_options;
  spsa_options.iterations = config.qaoa_iters;
  spsa_options.shots = config.qaoa_shots;
  const SpsaResult spsa = spsa_optimize(
      diagonal, warm_init(diagonal, config.qaoa_depth), spsa_options, seed_r);
  round.energy_trace = spsa.trace;

  const Statevector state = run_circuit(diagonal, spsa.params);
  const auto draws = sample(state, config.qaoa_final_shots,
                            derive_seed(seed_r, stream::kQaoa, 0xFACE));
  bool any_feasible = false;
  for (std::uint32_t z : draws)
    any_feasible |= (std::popcount(z) == config.budget);
  round.used_fallback = !any_feasible;
  const auto bits = extract_mask(draws, qubo_weights, config.budget);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) round.mask_atoms.push_back(qubo_atoms[i]);

  // Fine-tune the selected atoms on the items touched by this round's
  // bootstrap interactions.
  std::vector<std::int32_t> tune_items;
  for (std::int32_t row : weights.bootstrap_rows)
    tune_items.push_back(log.entries[static_cast<std::size_t>(row)].item);
  std::sort(tune_items.begin(), tune_items.end());
  tune_items.erase(std::unique(tune_items.begin(), tune_items.end()),
                   tune_items.end());
  Matrix tune_rows(static_cast<Index>(tune_items.size()),
                   context.sketch_rows->cols());
  for (std::size_t i = 0; i < tune_items.size(); ++i)
    tune_rows.row(static_cast<Index>(i)) =
        context.sketch_rows->row(tune_items[i]);
  Matrix selected(context.pool_atoms->rows(),
                  static_cast<Index>(round.mask_atoms.size()));
  for (std::size_t i = 0; i < round.mask_atoms.size(); ++i)
    selected.col(static_cast<Index>(i)) =
        context.pool_atoms->col(round.mask_atoms[i]);
  round.tuned_atoms =
      fine_tune_atoms(tune_rows, selected, context.lambda, 1, seed_r, 1);
  return round;
}

RunArtifacts run_single(const PipelineConfig& config, const InteractionLog& log,
                        const SparseMatrix& raw_tags,
                        std::uint64_t repeat_seed) {
  RunArtifacts artifacts;
  const int threads = config.threads > 0 ? config.threads : default_threads();
  const auto t_total = Clock::now();
  auto stage_start = Clock::now();
  auto record = [&](const std::string& stage) {
    artifacts.timings.emplace_back(stage, seconds_since(stage_start));
    stage_start = Clock::now();
  };

  const SparseMatrix profiles = tfidf(raw_tags);
  record("tfidf");

  const Split split = stratified_split(log, repeat_seed);
  record("split");

  const SvdSketch sketch =
      randomized_svd(profiles, std::min<Index>(config.svd_rank,
                                               std::min(profiles.rows(),
                                                        profiles.cols())),
                     config.svd_oversample, config.svd_power_iters, repeat_seed);
  artifacts.captured_energy = energy_captured(sketch, profiles);
  record("svd");

  KMeansOptions kmeans_options{config.kmeans_batch, config.kmeans_iters};
  const Clustering clustering = minibatch_kmeans(
      sketch.sketch, std::min<Index>(config.clusters, sketch.sketch.rows()),
      kmeans_options, repeat_seed);
  artifacts.cluster_sizes = clustering.sizes;
  record("kmeans");

  // Per-cluster sub-dictionaries in sketch space, learned independently.
  const auto n_clusters = static_cast<Index>(clustering.sizes.size());
  std::vector<Matrix> parts(static_cast<std::size_t>(n_clusters));
  artifacts.cluster_mse.assign(static_cast<std::size_t>(n_clusters), 0.0);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(n_clusters));
  for (Index i = 0; i < sketch.sketch.rows(); ++i)
    members[static_cast<std::size_t>(
        clustering.assignment[static_cast<std::size_t>(i)])].push_back(i);
  parallel_chunks(n_clusters, 1, threads, [&](Index begin, Index) {
    const auto c = static_cast<std::size_t>(begin);
    Matrix rows(static_cast<Index>(members[c].size()), sketch.sketch.cols());
    for (std::size_t i = 0; i < members[c].size(); ++i)
      rows.row(static_cast<Index>(i)) = sketch.sketch.row(members[c][i]);
    DictLearnOptions options;
    options.atoms = config.atoms_per_cluster;
    options.lambda = config.lambda;
    options.epochs = config.dict_epochs;
    options.batch = config.dict_batch;
    options.threads = 1;
    DictLearnResult learned = learn_subdictionary(
        rows, options, derive_seed(repeat_seed, stream::kDict,
                                   static_cast<std::uint64_t>(begin)));
    parts[c] = std::move(learned.atoms);
    artifacts.cluster_mse[c] = learned.final_mse;
  });
  Dictionary pool = concat_dictionary(parts);
  record("dict");

  const double lambda =
      config.lambda > 0.0
          ? config.lambda
          : auto_lambda(sketch.sketch, pool.atoms, config.dict_batch,
                        derive_seed(repeat_seed, stream::kDict, 0xFFFF));
  artifacts.lambda = lambda;
  const SparseMatrix codes = encode(sketch.sketch, pool.atoms, lambda, threads);
  record("encode");

  // Bootstrap rounds: weights -> candidates -> QUBO -> QAOA -> mask ->
  // fine-tune. Rounds are independent given their derived seeds.
  RoundContext context;
  context.log = &log;
  context.split = &split;
  context.sketch_rows = &sketch.sketch;
  context.pool_atoms = &pool.atoms;
  context.codes = &codes;
  context.lambda = lambda;
  artifacts.rounds.resize(static_cast<std::size_t>(config.rounds));
  std::vector<Vector> full_weights(static_cast<std::size_t>(config.rounds));
  parallel_chunks(config.rounds, 1, threads, [&](Index begin, Index) {
    const auto r = static_cast<std::size_t>(begin);
    artifacts.rounds[r] = run_bootstrap_round(
        static_cast<int>(begin), config, context, repeat_seed, &full_weights[r]);
  });
  record("rounds");

  // Aggregate masks into the final atom set; tuned copies of the same atom
  // are averaged and renormalized.
  std::vector<std::vector<std::int32_t>> masks;
  for (const RoundResult& round : artifacts.rounds)
    masks.push_back(round.mask_atoms);
  artifacts.mean_weights = Vector::Zero(pool.atoms.cols());
  for (const Vector& w : full_weights) artifacts.mean_weights += w;
  artifacts.mean_weights /= static_cast<double>(config.rounds);
  artifacts.final_atoms =
      aggregate_selections(masks, config.budget, artifacts.mean_weights);
  for (std::int32_t atom : artifacts.final_atoms)
    artifacts.final_provenance.push_back(
        pool.provenance[static_cast<std::size_t>(atom)]);

  artifacts.final_dictionary =
      Matrix::Zero(pool.atoms.rows(),
                   static_cast<Index>(artifacts.final_atoms.size()));
  artifacts.final_frequency.assign(artifacts.final_atoms.size(), 0);
  for (std::size_t i = 0; i < artifacts.final_atoms.size(); ++i) {
    const std::int32_t atom = artifacts.final_atoms[i];
    Vector acc = Vector::Zero(pool.atoms.rows());
    std::int32_t count = 0;
    for (const RoundResult& round : artifacts.rounds) {
      for (std::size_t j = 0; j < round.mask_atoms.size(); ++j)
        if (round.mask_atoms[j] == atom) {
          acc += round.tuned_atoms.col(static_cast<Index>(j));
          ++count;
        }
    }
    artifacts.final_frequency[i] = count;
    if (count > 0 && acc.norm() > 1e-12)
      artifacts.final_dictionary.col(static_cast<Index>(i)) = acc / acc.norm();
    else
      artifacts.final_dictionary.col(static_cast<Index>(i)) =
          pool.atoms.col(atom);
  }
  artifacts.final_dictionary_tags =
      sketch.right_vectors * artifacts.final_dictionary;
  record("aggregate");

  // Final codes and the bagged recommender.
  const double lambda_final =
      config.lambda > 0.0
          ? config.lambda
          : auto_lambda(sketch.sketch, artifacts.final_dictionary,
                        config.dict_batch,
                        derive_seed(repeat_seed, stream::kDict, 0xFFFE));
  const Matrix final_codes =
      Matrix(encode(sketch.sketch, artifacts.final_dictionary, lambda_final,
                    threads));

  PairScorer scorer;
  if (!config.forest_per_round) {
    scorer.parts.push_back(train_forest_part(
        config, log, split, final_codes, config.trees,
        derive_seed(repeat_seed, stream::kForest, 0xA66), threads));
  } else {
    // The 10-runs-x-10-trees composition: each round's tuned atoms encode
    // their own codes and train an equal share of the trees.
    const int per_round = std::max(1, config.trees / config.rounds);
    for (std::size_t r = 0; r < artifacts.rounds.size(); ++r) {
      const Matrix codes_r =
          Matrix(encode(sketch.sketch, artifacts.rounds[r].tuned_atoms,
                        lambda_final, threads));
      scorer.parts.push_back(train_forest_part(
          config, log, split, codes_r, per_round,
          derive_seed(repeat_seed, stream::kForest,
                      0xB00 + static_cast<std::uint64_t>(r)),
          threads));
    }
  }
  for (const auto& part : scorer.parts)
    scorer.total_trees += static_cast<std::int64_t>(part.forest.trees.size());
  record("forest");

  // Final evaluation on the held-out test split.
  auto train_items = items_by_user(log, split.train);
  auto valid_items = items_by_user(log, split.valid);
  auto test_items = items_by_user(log, split.test);
  std::vector<std::vector<ScoredItem>> per_user;
  std::vector<double> all_scores;
  std::vector<int> all_labels;
  for (std::int32_t u = 0; u < log.n_users; ++u) {
    const auto& positives = test_items[static_cast<std::size_t>(u)];
    if (positives.empty()) continue;
    std::vector<std::int32_t> avoid = train_items[static_cast<std::size_t>(u)];
    const auto& vi = valid_items[static_cast<std::size_t>(u)];
    avoid.insert(avoid.end(), vi.begin(), vi.end());
    avoid.insert(avoid.end(), positives.begin(), positives.end());
    std::sort(avoid.begin(), avoid.end());

    std::vector<ScoredItem> pool_scores;
    for (std::int32_t item : positives)
      pool_scores.push_back({scorer(u, item), item, true});
    for (std::int32_t item : sample_unclicked(
             log.n_items, avoid, config.eval_pool_negatives,
             derive_seed(repeat_seed, stream::kEval,
                         static_cast<std::uint64_t>(u))))
      pool_scores.push_back({scorer(u, item), item, false});

    for (const ScoredItem& s : pool_scores) {
      all_scores.push_back(s.score);
      all_labels.push_back(s.relevant ? 1 : 0);
    }
    per_user.push_back(std::move(pool_scores));
  }

  const MacroMicroNdcg ndcg = macro_micro_ndcg(per_user, config.ndcg_k);
  artifacts.report.macro_ndcg = ndcg.macro;
  artifacts.report.micro_ndcg = ndcg.micro;
  artifacts.report.roc_auc = roc_auc(all_scores, all_labels);
  artifacts.report.log_loss = log_loss(all_scores, all_labels);
  record("eval");

  artifacts.timings.emplace_back("total", seconds_since(t_total));
  return artifacts;
}

std::string metrics_json_line(const PipelineConfig& config,
                              std::uint64_t repeat_seed,
                              const MetricReport& report) {
  nlohmann::ordered_json j;
  j["repeat_seed"] = repeat_seed;
  j["macro_ndcg_at_10"] = {{"mean", report.macro_ndcg.mean},
                           {"median", report.macro_ndcg.median},
                           {"std", report.macro_ndcg.stddev},
                           {"users", report.macro_ndcg.users}};
  j["micro_ndcg_at_10"] = report.micro_ndcg;
  j["roc_auc"] = report.roc_auc;
  j["log_loss"] = report.log_loss;
  nlohmann::ordered_json snapshot;
  for (const auto& [key, value] : config.entries()) snapshot[key] = value;
  j["config"] = snapshot;
  return j.dump();
}

PipelineOutput run_pipeline(const PipelineConfig& config) {
  InteractionLog log;
  SparseMatrix tags;
  if (!config.interactions.empty() && !config.icm.empty()) {
    log = load_interactions(config.interactions);
    tags = load_tag_matrix(config.icm);
    if (tags.rows() < log.n_items)
      throw std::runtime_error("icm has fewer items than the interaction log");
  } else {
    SyntheticSpec spec;
    spec.users = config.synth_users;
    spec.items = config.synth_items;
    spec.tags = config.synth_tags;
    SyntheticData data =
        gen_synthetic(spec, derive_seed(config.seed, stream::kSynthetic));
    log = std::move(data.log);
    tags = std::move(data.tags);
  }

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  config.save((fs::path(config.out_dir) / "config_snapshot.txt").string());

  std::ofstream metrics_file(fs::path(config.out_dir) / "metrics.json",
                             std::ios::app);
  std::ofstream trace_file(fs::path(config.out_dir) / "energy_trace.tsv",
                           std::ios::app);
  std::ofstream atoms_file(fs::path(config.out_dir) / "selected_atoms.tsv",
                           std::ios::app);
  std::ofstream timings_file(fs::path(config.out_dir) / "timings.tsv",
                             std::ios::app);
  metrics_file.precision(17);
  trace_file.precision(17);
  atoms_file.precision(17);
  timings_file.precision(17);

  PipelineOutput output;
  std::vector<MetricReport> reports;
  for (int repeat = 0; repeat < config.repeats; ++repeat) {
    const std::uint64_t repeat_seed =
        derive_seed(config.seed, stream::kRepeat,
                    static_cast<std::uint64_t>(repeat));
    RunArtifacts artifacts = run_single(config, log, tags, repeat_seed);

    const std::string line = metrics_json_line(config, repeat_seed,
                                               artifacts.report);
    metrics_file << line << '\n';
    output.metric_lines.push_back(line);

    for (std::size_t r = 0; r < artifacts.rounds.size(); ++r) {
      const auto run_id = repeat * config.rounds + static_cast<int>(r);
      const auto& trace = artifacts.rounds[r].energy_trace;
      for (std::size_t it = 0; it < trace.size(); ++it)
        trace_file << run_id << '\t' << it << '\t' << trace[it] << '\n';
      const auto& round = artifacts.rounds[r];
      for (std::size_t i = 0; i < round.mask_atoms.size(); ++i) {
        const std::int32_t atom = round.mask_atoms[i];
        double weight = 0.0;
        for (std::size_t c = 0; c < round.candidates.size(); ++c)
          if (round.candidates[c] == atom)
            weight = round.candidate_weights[static_cast<Index>(c)];
        atoms_file << repeat << '\t' << r << '\t' << atom << '\t' << weight
                   << '\n';
      }
    }
    for (std::size_t i = 0; i < artifacts.final_atoms.size(); ++i)
      atoms_file << repeat << '\t' << "final" << '\t'
                 << artifacts.final_atoms[i] << '\t'
                 << artifacts.final_frequency[i] << '\n';
    for (const auto& [stage, seconds] : artifacts.timings)
      timings_file << repeat << '\t' << stage << '\t' << seconds << '\n';

    {
      std::ofstream weights_file(
          fs::path(config.out_dir) /
          ("atom_weights_" + std::to_string(repeat) + ".tsv"));
      weights_file.precision(17);
      for (Index a = 0; a < artifacts.mean_weights.size(); ++a)
        weights_file << a << '\t' << artifacts.mean_weights[a] << '\n';
      Dictionary final_dict;
      final_dict.atoms = artifacts.final_dictionary_tags;
      final_dict.provenance = artifacts.final_provenance;
      save_dictionary(final_dict,
                      (fs::path(config.out_dir) /
                       ("final_dictionary_" + std::to_string(repeat) + ".tsv"))
                          .string());
    }

    std::cout << "[repeat " << repeat << "] macro nDCG@" << config.ndcg_k
              << " mean=" << artifacts.report.macro_ndcg.mean
              << " median=" << artifacts.report.macro_ndcg.median
              << " std=" << artifacts.report.macro_ndcg.stddev
              << " | micro=" << artifacts.report.micro_ndcg
              << " | auc=" << artifacts.report.roc_auc
              << " | logloss=" << artifacts.report.log_loss << "\n";
    reports.push_back(artifacts.report);
    output.repeats.push_back(std::move(artifacts));
  }

  if (reports.size() > 1) {
    auto summarize = [&](const std::string& name, auto getter) {
      double mean = 0.0;
      for (const auto& r : reports) mean += getter(r);
      mean /= static_cast<double>(reports.size());
      double var = 0.0;
      for (const auto& r : reports)
        var += (getter(r) - mean) * (getter(r) - mean);
      const double stderr_mean =
          std::sqrt(var / static_cast<double>(reports.size() - 1)) /
          std::sqrt(static_cast<double>(reports.size()));
      std::cout << name << " = " << mean << " +/- " << stderr_mean
                << " (mean +/- standard error over " << reports.size()
                << " repeats)\n";
    };
    summarize("macro nDCG", [](const MetricReport& r) { return r.macro_ndcg.mean; });
    summarize("micro nDCG", [](const MetricReport& r) { return r.micro_ndcg; });
    summarize("roc auc", [](const MetricReport& r) { return r.roc_auc; });
    summarize("log loss", [](const MetricReport& r) { return r.log_loss; });
  }
  return output;
}

}  // namespace qsrf
