#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "silofuse/dataset.hpp"
#include "silofuse/error.hpp"
#include "silofuse/experiment.hpp"

namespace {

silofuse::ExperimentConfig load_config(const std::string& path) {
  return silofuse::ExperimentConfig::load(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silofuse: cross-silo tabular synthesis lab"};
  app.require_subcommand(1);

  std::string config_path;

  // ingest: validate a CSV against a schema and re-emit it.
  auto* ingest = app.add_subcommand("ingest", "validate a CSV against a schema and re-emit it");
  std::string ingest_csv_path, ingest_schema_path, ingest_out;
  ingest->add_option("--csv", ingest_csv_path, "input CSV")->required();
  ingest->add_option("--schema", ingest_schema_path, "schema file")->required();
  ingest->add_option("--out", ingest_out, "re-emitted CSV path")->required();

  auto* train = app.add_subcommand("train", "run stacked training and persist artifacts");
  train->add_option("--config", config_path, "experiment config JSON")->required();

  auto* synthesize = app.add_subcommand("synthesize", "generate synthetic rows from artifacts");
  std::string synth_config;
  int64_t synth_rows = 1000;
  bool synth_share = false;
  int synth_requester = 0;
  synthesize->add_option("--config", synth_config, "experiment config JSON")->required();
  synthesize->add_option("--rows", synth_rows, "row count")->required();
  synthesize->add_flag("--share", synth_share, "also emit the merged (shared) CSV");
  synthesize->add_option("--requester", synth_requester, "requesting client id (default 2)");

  auto* evaluate = app.add_subcommand("evaluate", "resemblance/utility of synthetic data");
  std::string eval_config, eval_real, eval_synth, eval_schema, eval_out;
  std::string eval_holdout;
  evaluate->add_option("--config", eval_config, "experiment config JSON")->required();
  evaluate->add_option("--real", eval_real, "real CSV")->required();
  evaluate->add_option("--synth", eval_synth, "synthetic CSV")->required();
  evaluate->add_option("--holdout", eval_holdout, "real holdout CSV (enables utility)");
  evaluate->add_option("--schema", eval_schema, "schema file")->required();
  evaluate->add_option("--out", eval_out, "output directory")->required();

  auto* attack = app.add_subcommand("attack", "privacy attack suite");
  std::string attack_config, attack_real, attack_synth, attack_control, attack_schema, attack_out;
  attack->add_option("--config", attack_config, "experiment config JSON")->required();
  attack->add_option("--real", attack_real, "real training CSV")->required();
  attack->add_option("--synth", attack_synth, "synthetic CSV")->required();
  attack->add_option("--control", attack_control, "disjoint control CSV")->required();
  attack->add_option("--schema", attack_schema, "schema file")->required();
  attack->add_option("--out", attack_out, "output directory")->required();

  auto* compare = app.add_subcommand("compare-comm", "stacked vs end-to-end bytes");
  std::string compare_config, compare_out;
  std::vector<int64_t> compare_iters{100, 1000, 10000};
  compare->add_option("--config", compare_config, "experiment config JSON")->required();
  compare->add_option("--iterations", compare_iters, "iteration counts");
  compare->add_option("--out", compare_out, "output directory")->required();

  auto* robustness = app.add_subcommand("robustness", "clients x permutation grid");
  std::string robust_config, robust_out;
  robustness->add_option("--config", robust_config, "experiment config JSON")->required();
  robustness->add_option("--out", robust_out, "output directory")->required();

  auto* generate = app.add_subcommand("generate", "emit a built-in dataset as CSV + schema");
  std::string gen_name = "correlated", gen_out;
  int64_t gen_rows = 4000;
  uint64_t gen_seed = 1;
  generate->add_option("--name", gen_name, "generator name (correlated|gaussian)");
  generate->add_option("--rows", gen_rows, "row count");
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("--out", gen_out, "output stem (writes <stem>.csv and <stem>.schema)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto schema = silofuse::read_schema_file(ingest_schema_path);
      const auto table = silofuse::ingest_csv(ingest_csv_path, schema);
      silofuse::emit_csv(table, ingest_out);
      std::cout << "ingested " << table.row_count() << " rows x " << table.column_count()
                << " columns\n";
    } else if (*train) {
      const auto outcome = silofuse::cmd_train(load_config(config_path));
      std::cout << "run directory: " << outcome.run_directory << "\n"
                << "training transcript: " << outcome.transcript_messages << " messages, "
                << outcome.transcript_bytes << " bytes\n";
    } else if (*synthesize) {
      const auto outcome = silofuse::cmd_synthesize(
          load_config(synth_config), synth_rows, synth_share,
          synth_requester > 0 ? std::optional<int>(synth_requester) : std::nullopt);
      for (const auto& path : outcome.client_csvs) std::cout << path << "\n";
      if (outcome.merged_csv) std::cout << *outcome.merged_csv << "\n";
    } else if (*evaluate) {
      const auto outcome = silofuse::cmd_evaluate(
          load_config(eval_config), eval_real, eval_synth,
          eval_holdout.empty() ? std::nullopt : std::optional<std::string>(eval_holdout),
          eval_schema, eval_out);
      std::cout << outcome.report.to_json() << "\n";
    } else if (*attack) {
      const auto outcome = silofuse::cmd_attack(load_config(attack_config), attack_real,
                                                attack_synth, attack_control, attack_schema,
                                                attack_out);
      std::cout << outcome.result.to_json() << "\n";
    } else if (*compare) {
      const auto outcome =
          silofuse::cmd_compare_comm(load_config(compare_config), compare_iters, compare_out);
      std::cout << "wrote " << outcome.csv_path << "\n";
    } else if (*robustness) {
      const auto outcome = silofuse::cmd_robustness(load_config(robust_config), robust_out);
      std::cout << "wrote " << outcome.csv_path << "\n";
      for (const auto& cell : outcome.cells) {
        std::cout << cell.clients << " clients, " << (cell.permuted ? "permuted" : "default")
                  << ": resemblance " << cell.resemblance << ", utility " << cell.utility << "\n";
      }
    } else if (*generate) {
      const auto table = silofuse::make_builtin_dataset(gen_name, gen_rows, gen_seed);
      silofuse::emit_csv(table, gen_out + ".csv");
      silofuse::write_schema_file(table.schema, gen_out + ".schema");
      std::cout << gen_out << ".csv\n" << gen_out << ".schema\n";
    }
  } catch (const silofuse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
