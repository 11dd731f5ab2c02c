#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "qsrf/pipeline.hpp"
#include "qsrf/qaoa.hpp"
#include "qsrf/qubo.hpp"
#include "qsrf/rng.hpp"
#include "qsrf/synthetic.hpp"

namespace {

void print_bits(const std::vector<std::uint8_t>& bits) {
  for (std::uint8_t b : bits) std::cout << static_cast<int>(b);
}

int cmd_run(const std::string& config_path, const qsrf::PipelineConfig& overrides,
            const std::vector<std::string>& set_flags) {
  qsrf::PipelineConfig config = config_path.empty()
                                    ? qsrf::PipelineConfig{}
                                    : qsrf::PipelineConfig::from_file(config_path);
  for (const std::string& kv : set_flags) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  // Direct flags win over config-file values and --set pairs.
  if (!overrides.interactions.empty()) config.interactions = overrides.interactions;
  if (!overrides.icm.empty()) config.icm = overrides.icm;
  if (overrides.out_dir != "out") config.out_dir = overrides.out_dir;
  if (overrides.seed != 42) config.seed = overrides.seed;
  if (overrides.repeats != 1) config.repeats = overrides.repeats;
  if (overrides.svd_rank != 32) config.svd_rank = overrides.svd_rank;
  if (overrides.svd_power_iters != 2) config.svd_power_iters = overrides.svd_power_iters;
  if (overrides.clusters != 50) config.clusters = overrides.clusters;
  if (overrides.kmeans_batch != 2048) config.kmeans_batch = overrides.kmeans_batch;
  if (overrides.kmeans_iters != 100) config.kmeans_iters = overrides.kmeans_iters;
  if (overrides.bootstrap_fraction != 0.2) config.bootstrap_fraction = overrides.bootstrap_fraction;
  if (overrides.k_top != 20) config.k_top = overrides.k_top;
  if (overrides.qaoa_depth != 3) config.qaoa_depth = overrides.qaoa_depth;
  if (overrides.qaoa_shots != 128) config.qaoa_shots = overrides.qaoa_shots;
  if (overrides.qaoa_final_shots != 200)
    config.qaoa_final_shots = overrides.qaoa_final_shots;
  if (overrides.qaoa_iters != 150) config.qaoa_iters = overrides.qaoa_iters;
  if (overrides.qaoa_qubits != 20) config.qaoa_qubits = overrides.qaoa_qubits;

  qsrf::run_pipeline(config);
  return 0;
}

int cmd_oracle_qubo(const std::string& path, int n, int budget, double penalty,
                    std::uint64_t seed, const std::string& save_path) {
  qsrf::QuboProblem problem;
  if (!path.empty()) {
    problem = qsrf::load_qubo(path);
    if (problem.budget == 0) problem.budget = budget;
  } else {
    auto rng = qsrf::make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    qsrf::Vector weights(n);
    for (int i = 0; i < n; ++i) weights[i] = unit(rng);
    problem = qsrf::build_qubo(weights, budget, penalty);
    std::cout << "random instance: n=" << n << " k=" << budget
              << " mu=" << penalty << " seed=" << seed << "\n";
  }
  const auto start = std::chrono::steady_clock::now();
  const qsrf::BruteForceResult minimum = qsrf::brute_force_minimum(problem);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::cout << "minimum energy: " << minimum.energy << "\n";
  std::cout << "minimizer:      ";
  print_bits(minimum.bits);
  std::cout << "\nenumerated 2^" << problem.n << " states in " << elapsed
            << " s\n";
  if (!save_path.empty()) {
    qsrf::save_qubo(problem, save_path);
    std::cout << "wrote " << save_path << "\n";
  }
  return 0;
}

int cmd_bench_qaoa(int n, int budget, double penalty, int depth, int shots,
                   int iters, std::uint64_t seed) {
  auto rng = qsrf::make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  qsrf::Vector weights(n);
  for (int i = 0; i < n; ++i) weights[i] = unit(rng);
  const qsrf::QuboProblem problem = qsrf::build_qubo(weights, budget, penalty);
  const qsrf::CostDiagonal diagonal = qsrf::precompute_diagonal(problem);

  const auto start = std::chrono::steady_clock::now();
  qsrf::SpsaOptions options;
  options.iterations = iters;
  options.shots = shots;
  const qsrf::SpsaResult spsa = qsrf::spsa_optimize(
      diagonal, qsrf::warm_init(diagonal, depth), options, seed);
  const qsrf::Statevector state = qsrf::run_circuit(diagonal, spsa.params);
  const auto draws = qsrf::sample(state, shots,
                                  qsrf::derive_seed(seed, qsrf::stream::kQaoa, 1));
  const auto mask = qsrf::extract_mask(draws, weights, budget);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  const qsrf::BruteForceResult exact = qsrf::brute_force_minimum(problem);
  std::cout << "qaoa depth=" << depth << " n=" << n << " shots=" << shots
            << " iters=" << iters << "\n";
  std::cout << "best expectation: " << spsa.best_expectation << "\n";
  std::cout << "extracted mask:   ";
  print_bits(mask);
  std::cout << " energy " << qsrf::energy(problem, mask) << "\n";
  std::cout << "exact minimum:    ";
  print_bits(exact.bits);
  std::cout << " energy " << exact.energy << "\n";
  std::cout << "qaoa wall clock:  " << elapsed << " s\n";
  return 0;
}

int cmd_gen_synthetic(std::int32_t users, std::int32_t items, std::int32_t tags,
                      std::uint64_t seed, const std::string& out_dir) {
  qsrf::SyntheticSpec spec;
  spec.users = users;
  spec.items = items;
  spec.tags = tags;
  const qsrf::SyntheticData data = qsrf::gen_synthetic(spec, seed);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  qsrf::save_interactions(data.log, (fs::path(out_dir) / "interactions.tsv").string());
  qsrf::save_tag_matrix(data.tags, (fs::path(out_dir) / "icm.tsv").string());
  {
    std::ofstream planted(fs::path(out_dir) / "planted_atoms.tsv");
    planted.precision(17);
    planted << "#tags=" << data.planted_signal.rows()
            << " atoms=" << data.planted_signal.cols() << "\n";
    for (qsrf::Index j = 0; j < data.planted_signal.cols(); ++j)
      for (qsrf::Index i = 0; i < data.planted_signal.rows(); ++i)
        if (data.planted_signal(i, j) != 0.0)
          planted << i << '\t' << j << '\t' << data.planted_signal(i, j) << '\n';
  }
  std::cout << "wrote " << data.log.entries.size() << " interactions, "
            << data.tags.rows() << "x" << data.tags.cols()
            << " tag matrix (density " << qsrf::density(data.tags) << ") to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid dictionary-learning + QAOA recommender pipeline"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute the full pipeline");
  std::string config_path;
  std::vector<std::string> set_flags;
  qsrf::PipelineConfig overrides;
  run->add_option("--config", config_path, "flat key=value config file");
  run->add_option("--set", set_flags, "override any config key (key=value)");
  run->add_option("--interactions", overrides.interactions, "interaction log path");
  run->add_option("--icm", overrides.icm, "item-tag matrix path");
  run->add_option("--out", overrides.out_dir, "output directory");
  run->add_option("--seed", overrides.seed, "master seed");
  run->add_option("--repeats", overrides.repeats, "independent repeats");
  run->add_option("--svd-rank", overrides.svd_rank, "sketch rank");
  run->add_option("--svd-power-iters", overrides.svd_power_iters, "power iterations");
  run->add_option("--clusters", overrides.clusters, "k-means cluster count");
  run->add_option("--kmeans-batch", overrides.kmeans_batch, "k-means batch size");
  run->add_option("--kmeans-iters", overrides.kmeans_iters, "k-means iterations");
  run->add_option("--bootstrap-fraction", overrides.bootstrap_fraction,
                  "per-round training-row fraction");
  run->add_option("--k-top", overrides.k_top, "candidate set size");
  run->add_option("--qaoa-depth", overrides.qaoa_depth, "QAOA layers");
  run->add_option("--qaoa-shots", overrides.qaoa_shots, "shots per objective");
  run->add_option("--qaoa-final-shots", overrides.qaoa_final_shots,
                  "shots for the final measurement");
  run->add_option("--qaoa-iters", overrides.qaoa_iters, "SPSA iterations");
  run->add_option("--qaoa-qubits", overrides.qaoa_qubits, "qubit budget");

  // oracle-qubo
  auto* oracle = app.add_subcommand("oracle-qubo",
                                    "exhaustive QUBO minimization");
  std::string qubo_path, qubo_save;
  int oracle_n = 12, oracle_k = 5;
  double oracle_mu = 1000.0;
  std::uint64_t oracle_seed = 42;
  oracle->add_option("--qubo", qubo_path, "QUBO text file to solve");
  oracle->add_option("--n", oracle_n, "random instance size");
  oracle->add_option("--k", oracle_k, "cardinality budget");
  oracle->add_option("--mu", oracle_mu, "penalty");
  oracle->add_option("--seed", oracle_seed, "random instance seed");
  oracle->add_option("--save", qubo_save, "write the instance to a file");

  // bench-qaoa
  auto* bench = app.add_subcommand("bench-qaoa", "QAOA vs brute force");
  int bench_n = 12, bench_k = 5, bench_depth = 3, bench_shots = 128,
      bench_iters = 150;
  double bench_mu = 1000.0;
  std::uint64_t bench_seed = 42;
  bench->add_option("--n", bench_n, "instance size");
  bench->add_option("--k", bench_k, "cardinality budget");
  bench->add_option("--mu", bench_mu, "penalty");
  bench->add_option("--depth", bench_depth, "QAOA layers");
  bench->add_option("--shots", bench_shots, "shots per objective");
  bench->add_option("--iters", bench_iters, "SPSA iterations");
  bench->add_option("--seed", bench_seed, "seed");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "write a planted-signal corpus");
  std::int32_t gen_users = 600, gen_items = 3000, gen_tags = 150;
  std::uint64_t gen_seed = 42;
  std::string gen_out = "synthetic";
  gen->add_option("--users", gen_users, "user count");
  gen->add_option("--items", gen_items, "item count");
  gen->add_option("--tags", gen_tags, "tag count");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, set_flags);
    if (oracle->parsed())
      return cmd_oracle_qubo(qubo_path, oracle_n, oracle_k, oracle_mu,
                             oracle_seed, qubo_save);
    if (bench->parsed())
      return cmd_bench_qaoa(bench_n, bench_k, bench_mu, bench_depth,
                            bench_shots, bench_iters, bench_seed);
    if (gen->parsed())
      return cmd_gen_synthetic(gen_users, gen_items, gen_tags, gen_seed, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
