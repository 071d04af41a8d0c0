#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "silofuse/dataset.hpp"
#include "silofuse/error.hpp"
#include "silofuse/experiment.hpp"

using namespace silofuse;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

ExperimentConfig tiny_experiment(const std::string& out_dir, uint64_t seed = 5) {
  ExperimentConfig cfg;
  cfg.dataset.kind = "generator";
  cfg.dataset.generator = "correlated";
  cfg.dataset.rows = 400;
  cfg.federation.clients = 4;
  cfg.federation.ae_hidden_total = 64;
  cfg.federation.ae_epochs = 10;
  cfg.federation.ae_batch = 64;
  cfg.federation.diffusion.timesteps = 50;
  cfg.federation.diffusion.inference_steps = 10;
  cfg.federation.diffusion.backbone_depth = 3;
  cfg.federation.diffusion.backbone_hidden = 16;
  cfg.federation.diffusion.train_iters = 150;
  cfg.federation.diffusion.batch_size = 64;
  cfg.metrics.learner_epochs = 8;
  cfg.metrics.propensity_epochs = 6;
  cfg.attacks.n_predicates = 50;
  cfg.attacks.n_targets = 50;
  cfg.output_dir = out_dir;
  cfg.master_seed = seed;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config round-trips through JSON and hashes deterministically") {
  const ExperimentConfig cfg = tiny_experiment("/tmp/silofuse_cfg");
  const std::string dumped = cfg.to_json();
  const ExperimentConfig parsed = ExperimentConfig::from_json(dumped);
  CHECK(parsed.to_json() == dumped);
  CHECK(parsed.config_hash() == cfg.config_hash());

  ExperimentConfig other = cfg;
  other.master_seed = 99;
  CHECK(other.config_hash() != cfg.config_hash());
}

TEST_CASE("train twice with one config and seed: byte-identical artifacts") {
  TempDir dir_a("silofuse_cli_det_a");
  TempDir dir_b("silofuse_cli_det_b");
  ExperimentConfig a = tiny_experiment(dir_a.path.string());
  ExperimentConfig b = tiny_experiment(dir_b.path.string());

  const auto out_a = cmd_train(a);
  const auto out_b = cmd_train(b);

  for (const std::string name :
       {"artifacts/backbone.bin", "artifacts/client_1_encoder.bin",
        "artifacts/client_3_decoder.bin", "artifacts/meta.json", "real.csv",
        "transcript_train.csv"}) {
    CHECK(read_file(fs::path(out_a.run_directory) / name) ==
          read_file(fs::path(out_b.run_directory) / name));
  }

  // Synthesis + evaluation outputs are reproducible too.
  const auto synth_a = cmd_synthesize(a, 200, true);
  const auto synth_b = cmd_synthesize(b, 200, true);
  REQUIRE(synth_a.merged_csv.has_value());
  CHECK(read_file(*synth_a.merged_csv) == read_file(*synth_b.merged_csv));

  const auto eval_a = cmd_evaluate(a, (fs::path(out_a.run_directory) / "real.csv").string(),
                                   *synth_a.merged_csv, std::nullopt,
                                   (fs::path(out_a.run_directory) / "schema.txt").string(),
                                   (dir_a.path / "eval").string());
  const auto eval_b = cmd_evaluate(b, (fs::path(out_b.run_directory) / "real.csv").string(),
                                   *synth_b.merged_csv, std::nullopt,
                                   (fs::path(out_b.run_directory) / "schema.txt").string(),
                                   (dir_b.path / "eval").string());
  CHECK(eval_a.report.resemblance == eval_b.report.resemblance);
}

TEST_CASE("validation rejects more clients than columns before any training") {
  TempDir dir("silofuse_cli_badcfg");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  cfg.federation.clients = 9;  // fixture has 5 columns
  CHECK_THROWS_WITH_AS(cmd_train(cfg), doctest::Contains("exceeds column count"), Error);
}

TEST_CASE("synthesize: zero rows gives headers-only CSVs; merged column count is d") {
  TempDir dir("silofuse_cli_synth");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  cmd_train(cfg);

  const auto zero = cmd_synthesize(cfg, 0, true);
  REQUIRE(zero.merged_csv.has_value());
  const std::string merged = read_file(*zero.merged_csv);
  CHECK(merged == "x1,x2,x3,grade,segment\n");
  for (const auto& path : zero.client_csvs) {
    std::istringstream in(read_file(path));
    std::string header, extra;
    CHECK(std::getline(in, header));
    CHECK(!std::getline(in, extra));
  }

  const auto some = cmd_synthesize(cfg, 37, true);
  const Schema schema = read_schema_file((fs::path(cfg.run_dir()) / "schema.txt").string());
  const Table synth = ingest_csv(*some.merged_csv, schema);
  CHECK(synth.row_count() == 37);
  CHECK(synth.column_count() == 5);
  synth.validate();
}

TEST_CASE("synthesize without artifacts reports the missing path") {
  TempDir dir("silofuse_cli_missing");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  CHECK_THROWS_WITH_AS(cmd_synthesize(cfg, 10, false), doctest::Contains("missing artifacts"),
                       Error);
}

TEST_CASE("evaluate: schema mismatch errors, histograms cover all columns") {
  TempDir dir("silofuse_cli_eval");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  const Table real = make_correlated_fixture(300, 1);
  const Table synth = make_correlated_fixture(300, 2);
  const Table holdout = make_correlated_fixture(150, 3);
  emit_csv(real, (dir.path / "real.csv").string());
  emit_csv(synth, (dir.path / "synth.csv").string());
  emit_csv(holdout, (dir.path / "holdout.csv").string());
  write_schema_file(real.schema, (dir.path / "schema.txt").string());

  const auto outcome = cmd_evaluate(cfg, (dir.path / "real.csv").string(),
                                    (dir.path / "synth.csv").string(),
                                    (dir.path / "holdout.csv").string(),
                                    (dir.path / "schema.txt").string(),
                                    (dir.path / "eval").string());
  CHECK(outcome.report.utility.has_value());
  CHECK(fs::exists(outcome.report_json_path));
  CHECK(fs::exists(outcome.report_csv_path));
  int64_t histogram_files = 0;
  for (const auto& entry : fs::directory_iterator(outcome.histogram_dir)) {
    (void)entry;
    ++histogram_files;
  }
  CHECK(histogram_files == real.column_count());

  // Parse back the JSON report and check the documented fields.
  const auto parsed = nlohmann::json::parse(read_file(outcome.report_json_path));
  CHECK(parsed.contains("resemblance"));
  CHECK(parsed.contains("utility"));
  CHECK(parsed["seed"] == cfg.master_seed);

  // A schema that does not match the CSV is rejected.
  Schema wrong;
  wrong.columns = {ColumnSpec::continuous("nope"), ColumnSpec::continuous("x")};
  write_schema_file(wrong, (dir.path / "wrong.txt").string());
  CHECK_THROWS_AS(cmd_evaluate(cfg, (dir.path / "real.csv").string(),
                               (dir.path / "synth.csv").string(), std::nullopt,
                               (dir.path / "wrong.txt").string(), (dir.path / "eval2").string()),
                  Error);
}

TEST_CASE("attack command: json output and ordering of copy vs marginal") {
  TempDir dir("silofuse_cli_attack");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  const Table full = make_correlated_fixture(600, 7);
  const Table train = full.head(300);
  const Table control = full.tail(300);
  const Table copy = train;
  const Table marginal = make_marginal_synthetic(control, 8);
  emit_csv(train, (dir.path / "train.csv").string());
  emit_csv(control, (dir.path / "control.csv").string());
  emit_csv(copy, (dir.path / "copy.csv").string());
  emit_csv(marginal, (dir.path / "marginal.csv").string());
  write_schema_file(train.schema, (dir.path / "schema.txt").string());

  const auto copy_outcome = cmd_attack(cfg, (dir.path / "train.csv").string(),
                                       (dir.path / "copy.csv").string(),
                                       (dir.path / "control.csv").string(),
                                       (dir.path / "schema.txt").string(),
                                       (dir.path / "attack_copy").string());
  const auto marginal_outcome = cmd_attack(cfg, (dir.path / "train.csv").string(),
                                           (dir.path / "marginal.csv").string(),
                                           (dir.path / "control.csv").string(),
                                           (dir.path / "schema.txt").string(),
                                           (dir.path / "attack_marginal").string());
  CHECK(copy_outcome.result.score < marginal_outcome.result.score);

  const auto parsed = nlohmann::json::parse(read_file(copy_outcome.json_path));
  CHECK(parsed.contains("privacy_score"));
  CHECK(parsed.contains("singling_out"));
  CHECK(parsed["singling_out"].contains("risk"));

  // Missing control file surfaces as an ingestion error.
  CHECK_THROWS_AS(cmd_attack(cfg, (dir.path / "train.csv").string(),
                             (dir.path / "copy.csv").string(),
                             (dir.path / "nonexistent.csv").string(),
                             (dir.path / "schema.txt").string(),
                             (dir.path / "attack_x").string()),
                  Error);
}

TEST_CASE("compare-comm: stacked row constant, e2e exactly linear, one-hot dominant") {
  TempDir dir("silofuse_cli_comm");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  cfg.federation.diffusion.batch_size = 64;
  const auto outcome = cmd_compare_comm(cfg, {10, 50, 100}, (dir.path / "comm").string());
  REQUIRE(outcome.rows.size() == 9);

  int64_t stacked_bytes = -1;
  int64_t e2e_per_iter = -1;
  for (const auto& row : outcome.rows) {
    if (row.variant == "Stacked") {
      if (stacked_bytes < 0) stacked_bytes = row.total_bytes;
      CHECK(row.total_bytes == stacked_bytes);  // identical across iteration counts
      CHECK(row.rounds == 1);
    } else if (row.variant == "E2EDistr") {
      if (e2e_per_iter < 0) e2e_per_iter = row.total_bytes / row.iterations;
      CHECK(row.total_bytes == e2e_per_iter * row.iterations);  // zero residual
      CHECK(row.rounds == row.iterations);
    } else {
      CHECK(row.variant == "HypotheticalOneHot");
      CHECK(row.total_bytes >= e2e_per_iter * row.iterations);  // categorical schema
    }
  }
  CHECK(fs::exists(outcome.csv_path));
}

TEST_CASE("robustness grid: 4 cells, both client counts, schema recovery intact") {
  TempDir dir("silofuse_cli_robust");
  ExperimentConfig cfg = tiny_experiment(dir.path.string());
  cfg.dataset.generator = "correlated-wide";
  cfg.dataset.rows = 300;
  cfg.federation.ae_epochs = 4;
  cfg.federation.diffusion.train_iters = 40;
  cfg.metrics.learner_epochs = 4;
  cfg.metrics.propensity_epochs = 3;
  const auto outcome = cmd_robustness(cfg, (dir.path / "robust").string());
  REQUIRE(outcome.cells.size() == 4);
  std::set<std::pair<int64_t, bool>> seen;
  for (const auto& cell : outcome.cells) {
    seen.insert({cell.clients, cell.permuted});
    CHECK(cell.resemblance >= 0.0);
    CHECK(cell.resemblance <= 100.0);
  }
  CHECK(seen == std::set<std::pair<int64_t, bool>>{{4, false}, {4, true}, {8, false}, {8, true}});

  const std::string csv = read_file(outcome.csv_path);
  CHECK(csv.find("seed12343") != std::string::npos);
}

TEST_CASE("the silofuse binary wires exit codes") {
  TempDir dir("silofuse_cli_bin");
  const std::string binary = fs::absolute("tools/silofuse").string();
  if (!fs::exists(binary)) return;  // only run when invoked from the build tree
  const ExperimentConfig cfg = tiny_experiment((dir.path / "runs").string());
  cfg.save((dir.path / "cfg.json").string());

  const int ok = std::system((binary + " train --config " + (dir.path / "cfg.json").string() +
                              " > /dev/null 2>&1")
                                 .c_str());
  CHECK(ok == 0);
  const int bad = std::system((binary + " synthesize --config /nonexistent.json --rows 5 "
                               "> /dev/null 2>&1")
                                  .c_str());
  CHECK(bad != 0);
}
