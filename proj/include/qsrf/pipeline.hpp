#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qsrf/cluster.hpp"
#include "qsrf/corpus.hpp"
#include "qsrf/dict.hpp"
#include "qsrf/metrics.hpp"
#include "qsrf/qubo.hpp"
#include "qsrf/synthetic.hpp"
#include "qsrf/types.hpp"

namespace qsrf {

/// Every stage hyperparameter of the end-to-end run. Defaults track the
/// reference configuration; the flat key=value file format and the CLI
/// flags both map 1:1 onto these fields.
struct PipelineConfig {
  // data
  std::string interactions;
  std::string icm;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  int repeats = 1;
  // synthetic corpus (used when no data paths are given)
  std::int32_t synth_users = 600;
  std::int32_t synth_items = 3000;
  std::int32_t synth_tags = 150;
  // sketch
  Index svd_rank = 32;
  Index svd_oversample = 10;
  int svd_power_iters = 2;
  // cluster
  Index clusters = 50;
  Index kmeans_batch = 2048;
  int kmeans_iters = 100;
  // dictionary
  Index atoms_per_cluster = 20;
  double lambda = 0.0;  // <= 0: warm-up heuristic
  int dict_epochs = 5;
  Index dict_batch = 2048;
  // importance
  double bootstrap_fraction = 0.2;
  int k_top = 20;
  int pool_negatives = 100;
  // qubo / qaoa
  int budget = 5;
  double penalty = 1000.0;
  std::string qubo_form = "exact";
  int qaoa_depth = 3;
  int qaoa_shots = 128;        // per SPSA objective evaluation
  int qaoa_final_shots = 200;  // final measurement fed to extract_mask
  int qaoa_iters = 150;
  int qaoa_qubits = 20;  // < k_top truncates the candidate set
  int rounds = 10;
  // forest
  int trees = 100;
  int tree_depth = 8;
  int min_leaf = 5;
  double train_neg_ratio = 1.0;
  bool forest_per_round = false;  // 10-runs-x-10-trees composition
  // evaluation
  int ndcg_k = 10;
  int eval_pool_negatives = 100;
  int threads = 0;  // 0: hardware concurrency

  static PipelineConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  /// Deterministic key order; the exact content of config snapshots.
  std::vector<std::pair<std::string, std::string>> entries() const;
  void save(const std::string& path) const;
};

struct MetricReport {
  MacroStats macro_ndcg;
  double micro_ndcg = 0.0;
  double roc_auc = 0.0;
  double log_loss = 0.0;
};

struct RoundResult {
  std::vector<std::int32_t> candidates;  // global atom ids, ascending
  Vector candidate_weights;              // aligned with `candidates`
  std::vector<std::int32_t> mask_atoms;  // selected global atom ids
  std::vector<double> energy_trace;      // best-so-far expectation per iteration
  Matrix tuned_atoms;                    // dim x budget, column i for mask_atoms[i]
  bool used_fallback = false;
};

struct RunArtifacts {
  double captured_energy = 0.0;
  std::vector<std::int64_t> cluster_sizes;
  std::vector<double> cluster_mse;
  double lambda = 0.0;
  std::vector<RoundResult> rounds;
  Vector mean_weights;                         // per-atom, averaged over rounds
  std::vector<std::int32_t> final_atoms;       // global ids, ascending
  std::vector<std::int32_t> final_frequency;   // rounds selecting each final atom
  std::vector<std::pair<std::int32_t, std::int32_t>> final_provenance;
  Matrix final_dictionary;                     // sketch-space, dim x budget
  Matrix final_dictionary_tags;                // lifted to tag space
  MetricReport report;
  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
};

/// Inputs shared by every bootstrap round of one repeat.
struct RoundContext {
  const InteractionLog* log = nullptr;
  const Split* split = nullptr;
  const Matrix* sketch_rows = nullptr;   // items x d
  const Matrix* pool_atoms = nullptr;    // d x atoms
  const SparseMatrix* codes = nullptr;   // items x atoms
  double lambda = 0.0;
};

/// One bootstrap round: 20% row subsample -> per-atom weights -> candidate
/// set -> QUBO -> QAOA -> mask extraction -> fine-tune of the selected
/// atoms. Falls back to the top-k-by-weight mask when no sampled bitstring
/// is cardinality-feasible, so the round always yields exactly `budget`
/// atoms. Returns the round's full weight vector through `weights_out`.
RoundResult run_bootstrap_round(int round_index, const PipelineConfig& config,
                                const RoundContext& context,
                                std::uint64_t repeat_seed, Vector* weights_out);

/// Selection frequency across round masks; ties by mean weight, then index.
std::vector<std::int32_t> aggregate_selections(
    const std::vector<std::vector<std::int32_t>>& masks, int k,
    const Eigen::Ref<const Vector>& mean_weights);

/// End-to-end single run at the given repeat seed over prepared data.
RunArtifacts run_single(const PipelineConfig& config, const InteractionLog& log,
                        const SparseMatrix& raw_tags, std::uint64_t repeat_seed);

struct PipelineOutput {
  std::vector<RunArtifacts> repeats;
  std::vector<std::string> metric_lines;  // serialized metrics.json lines
};

/// Loads (or synthesizes) the corpus, executes `repeats` runs with derived
/// seeds, and writes metrics.json / energy_trace.tsv / selected_atoms.tsv /
/// timings.tsv plus a config snapshot under out_dir.
PipelineOutput run_pipeline(const PipelineConfig& config);

/// One serialized metrics.json line (no timing content, so identical runs
/// emit identical bytes).
std::string metrics_json_line(const PipelineConfig& config,
                              std::uint64_t repeat_seed,
                              const MetricReport& report);

}  // namespace qsrf
