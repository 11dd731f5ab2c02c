#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "qsrf/pipeline.hpp"

using namespace qsrf;

namespace {

PipelineConfig small_config(const std::string& out_dir) {
  PipelineConfig config;
  config.out_dir = out_dir;
  config.synth_users = 150;
  config.synth_items = 600;
  config.synth_tags = 150;
  config.clusters = 10;
  config.atoms_per_cluster = 8;
  config.dict_epochs = 2;
  config.rounds = 2;
  config.k_top = 8;
  config.qaoa_qubits = 8;
  config.qaoa_iters = 15;
  config.budget = 3;
  config.trees = 10;
  config.pool_negatives = 20;
  config.eval_pool_negatives = 20;
  config.threads = 2;
  return config;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("aggregate_selections: identical, disjoint, and weighted ties") {
  Vector weights = Vector::Zero(12);
  for (Index j = 0; j < 12; ++j) weights[j] = 0.1 * static_cast<double>(j);

  // All rounds identical: that mask wins outright.
  std::vector<std::vector<std::int32_t>> same{{1, 4, 7}, {1, 4, 7}, {1, 4, 7}};
  CHECK(aggregate_selections(same, 3, weights) ==
        std::vector<std::int32_t>{1, 4, 7});

  // Disjoint masks: every atom ties at frequency 1, so the mean weight
  // decides; weights grow with the index here.
  std::vector<std::vector<std::int32_t>> disjoint{{0, 1, 2, 3, 4},
                                                  {5, 6, 7, 8, 9}};
  CHECK(aggregate_selections(disjoint, 5, weights) ==
        std::vector<std::int32_t>{5, 6, 7, 8, 9});

  // Frequencies (3, 2, 2, 1): k=2 takes atom 0 plus the heavier of the two
  // frequency-2 candidates.
  Vector tie_weights = Vector::Zero(12);
  tie_weights[1] = 0.2;
  tie_weights[2] = 0.9;
  std::vector<std::vector<std::int32_t>> mixed{
      {0, 1, 2}, {0, 1, 3}, {0, 2, 4}};
  CHECK(aggregate_selections(mixed, 2, tie_weights) ==
        std::vector<std::int32_t>{0, 2});

  // Equal frequency and equal weight: the lower atom index wins.
  Vector flat = Vector::Zero(12);
  std::vector<std::vector<std::int32_t>> pair{{3, 5}, {5, 3}};
  CHECK(aggregate_selections(pair, 1, flat) == std::vector<std::int32_t>{3});
}

TEST_CASE("config file round-trip and unknown keys") {
  PipelineConfig config;
  config.seed = 99;
  config.k_top = 12;
  config.qubo_form = "ones-outer";
  const auto path =
      (std::filesystem::temp_directory_path() / "qsrf_config.txt").string();
  config.save(path);
  const PipelineConfig reloaded = PipelineConfig::from_file(path);
  CHECK(reloaded.seed == 99);
  CHECK(reloaded.k_top == 12);
  CHECK(reloaded.qubo_form == "ones-outer");
  CHECK(reloaded.entries() == config.entries());

  PipelineConfig bad;
  CHECK_THROWS_AS(bad.set("no_such_key", "1"), std::invalid_argument);
}

TEST_CASE("pipeline smoke run: artifacts are complete and in range") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "qsrf_pipe_smoke";
  fs::remove_all(dir);
  PipelineConfig config = small_config(dir.string());
  const PipelineOutput output = run_pipeline(config);
  REQUIRE(output.repeats.size() == 1);
  const RunArtifacts& artifacts = output.repeats[0];

  CHECK(artifacts.final_atoms.size() == 3);  // always exactly k atoms
  CHECK(artifacts.final_dictionary.cols() == 3);
  for (Index j = 0; j < 3; ++j)
    CHECK(artifacts.final_dictionary.col(j).norm() ==
          doctest::Approx(1.0).epsilon(1e-8));

  CHECK(artifacts.report.macro_ndcg.mean >= 0.0);
  CHECK(artifacts.report.macro_ndcg.mean <= 1.0);
  CHECK(artifacts.report.micro_ndcg >= 0.0);
  CHECK(artifacts.report.micro_ndcg <= 1.0);
  CHECK(artifacts.report.roc_auc >= 0.0);
  CHECK(artifacts.report.roc_auc <= 1.0);
  CHECK(artifacts.report.log_loss >= 0.0);

  for (const auto& round : artifacts.rounds) {
    CHECK(round.mask_atoms.size() == 3);
    CHECK(round.candidates.size() == 8);
    // Elitist traces never increase.
    for (std::size_t i = 1; i < round.energy_trace.size(); ++i)
      CHECK(round.energy_trace[i] <= round.energy_trace[i - 1] + 1e-12);
  }

  CHECK(fs::exists(dir / "metrics.json"));
  CHECK(fs::exists(dir / "energy_trace.tsv"));
  CHECK(fs::exists(dir / "selected_atoms.tsv"));
  CHECK(fs::exists(dir / "timings.tsv"));
  CHECK(fs::exists(dir / "config_snapshot.txt"));

  bool has_total = false;
  for (const auto& [stage, seconds] : artifacts.timings) {
    CHECK(seconds >= 0.0);
    has_total |= stage == "total";
  }
  CHECK(has_total);
}

TEST_CASE("identical config and seed reproduce metrics.json byte for byte") {
  namespace fs = std::filesystem;
  const auto dir_a = fs::temp_directory_path() / "qsrf_pipe_det_a";
  const auto dir_b = fs::temp_directory_path() / "qsrf_pipe_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  PipelineConfig config_a = small_config(dir_a.string());
  config_a.rounds = 2;
  config_a.qaoa_iters = 8;
  PipelineConfig config_b = config_a;
  config_b.out_dir = dir_b.string();
  config_b.threads = 1;  // parallelism must not affect results

  const PipelineOutput a = run_pipeline(config_a);
  const PipelineOutput b = run_pipeline(config_b);
  REQUIRE(a.metric_lines.size() == 1);
  REQUIRE(b.metric_lines.size() == 1);

  // The config snapshot embeds out_dir and threads, which legitimately
  // differ here; everything before the snapshot must match exactly.
  const auto strip = [](const std::string& line) {
    return line.substr(0, line.find("\"config\""));
  };
  CHECK(strip(a.metric_lines[0]) == strip(b.metric_lines[0]));
  CHECK(a.repeats[0].final_atoms == b.repeats[0].final_atoms);
  CHECK((a.repeats[0].final_dictionary - b.repeats[0].final_dictionary)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Byte-identical reruns of the same config into a fresh directory.
  const std::string first = slurp(dir_a / "metrics.json");
  fs::remove_all(dir_a);
  run_pipeline(config_a);
  CHECK(slurp(dir_a / "metrics.json") == first);
}

TEST_CASE("synthetic corpus generator invariants") {
  SyntheticSpec spec;
  spec.users = 100;
  spec.items = 500;
  spec.tags = 150;
  const SyntheticData data = gen_synthetic(spec, 5);
  CHECK(data.log.n_users == 100);
  CHECK(data.log.n_items == 500);
  CHECK(data.tags.rows() == 500);
  CHECK(data.planted_signal.cols() == 5);
  for (Index a = 0; a < 5; ++a)
    CHECK(data.planted_signal.col(a).norm() == doctest::Approx(1.0));
  // binary tag matrix
  for (Index i = 0; i < data.tags.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(data.tags, i); it; ++it)
      CHECK(it.value() == 1.0);
  // every user keeps at least two interactions
  std::vector<int> counts(100, 0);
  for (const auto& e : data.log.entries) ++counts[static_cast<std::size_t>(e.user)];
  for (int c : counts) CHECK(c >= 2);

  const SyntheticData again = gen_synthetic(spec, 5);
  CHECK(again.log.entries.size() == data.log.entries.size());
}

TEST_CASE("match_planted pairs identical directions at cosine one") {
  const Matrix atoms = oracle::random_unit_atoms(20, 8, 3);
  Matrix planted(20, 3);
  planted.col(0) = atoms.col(5);
  planted.col(1) = -atoms.col(2);  // sign must not matter
  planted.col(2) = atoms.col(7);
  const auto matched = match_planted(planted, atoms);
  for (double cosine : matched) CHECK(cosine == doctest::Approx(1.0));
}
