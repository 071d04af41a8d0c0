#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "silofuse/metrics.hpp"
#include "silofuse/privacy.hpp"
#include "silofuse/protocol.hpp"

namespace silofuse {

struct DatasetSource {
  std::string kind = "generator";  // "generator" | "csv"
  std::string generator = "correlated";
  int64_t rows = 4000;
  std::string csv_path;
  std::string schema_path;
};

/// Experiment-level configuration: one structured file drives dataset,
/// federation, model and evaluation settings. The master seed derives every
/// module stream via derive_seed(master, stream-name, index).
struct ExperimentConfig {
  DatasetSource dataset;
  FederationConfig federation;
  MetricsConfig metrics;
  AttackParams attacks;
  std::string output_dir = "runs";
  uint64_t master_seed = 1;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  // FNV-1a over the canonical JSON dump; names the run directory.
  std::string config_hash() const;
  std::string run_dir() const;

  void validate() const;
  // Loads the CSV or generates the built-in dataset (seeded from the master).
  Table materialize_dataset() const;
  // A disjoint holdout slice for utility evaluation (generator-backed
  // datasets draw fresh rows; CSV datasets split off the tail).
  Table materialize_holdout(int64_t rows) const;
};

// --- artifact persistence -------------------------------------------------------

void save_artifacts(const StackedArtifacts& artifacts, const std::string& directory);
StackedArtifacts load_artifacts(const std::string& directory);

// --- commands -------------------------------------------------------------------

struct TrainOutcome {
  std::string run_directory;
  int64_t transcript_bytes = 0;
  int64_t transcript_messages = 0;
};

// Stacked training end to end: materialize data, train, persist artifacts,
// transcript CSV and the training table.
TrainOutcome cmd_train(const ExperimentConfig& config);

struct SynthesizeOutcome {
  std::vector<std::string> client_csvs;
  std::optional<std::string> merged_csv;  // set when share = true
  int64_t transcript_messages = 0;
};

SynthesizeOutcome cmd_synthesize(const ExperimentConfig& config, int64_t rows, bool share,
                                 std::optional<int> requester = std::nullopt);

struct EvaluateOutcome {
  ScoreReport report;
  std::string report_json_path;
  std::string report_csv_path;
  std::string histogram_dir;
};

EvaluateOutcome cmd_evaluate(const ExperimentConfig& config, const std::string& real_csv,
                             const std::string& synth_csv,
                             const std::optional<std::string>& holdout_csv,
                             const std::string& schema_path, const std::string& out_dir);

struct AttackOutcome {
  PrivacySuiteResult result;
  std::string json_path;
};

AttackOutcome cmd_attack(const ExperimentConfig& config, const std::string& real_csv,
                         const std::string& synth_csv, const std::string& control_csv,
                         const std::string& schema_path, const std::string& out_dir);

struct CommRow {
  std::string variant;  // Stacked | E2EDistr | HypotheticalOneHot
  int64_t iterations = 0;
  int64_t total_bytes = 0;
  int64_t payload_bytes = 0;
  int64_t rounds = 0;
  int64_t messages = 0;
};

struct CompareCommOutcome {
  std::vector<CommRow> rows;
  std::string csv_path;
};

// Stacked vs end-to-end vs hypothetical one-hot byte totals per iteration
// count, each produced by actually running the protocol.
CompareCommOutcome cmd_compare_comm(const ExperimentConfig& config,
                                    const std::vector<int64_t>& iteration_counts,
                                    const std::string& out_dir);

struct RobustnessCell {
  int64_t clients = 0;
  bool permuted = false;
  double resemblance = 0.0;
  double utility = 0.0;
};

struct RobustnessOutcome {
  std::vector<RobustnessCell> cells;
  std::string csv_path;
};

// The 2x2 grid: clients in {4, 8} x {default order, permutation seed 12343},
// full pipeline per cell.
RobustnessOutcome cmd_robustness(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace silofuse
