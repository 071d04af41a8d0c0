#include "silofuse/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "silofuse/dataset.hpp"
#include "silofuse/error.hpp"

namespace silofuse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kModule = "cli";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, "config", "cannot open '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "write", "cannot open '" + path + "'");
  out << content;
}

json vector_to_json(const std::vector<double>& v) { return json(v); }

TransportKind transport_from_string(const std::string& s) {
  if (s == "in-process") return TransportKind::InProcess;
  if (s == "tcp") return TransportKind::Tcp;
  throw Error(kModule, "config", "unknown transport '" + s + "'");
}

std::string transport_to_string(TransportKind t) {
  return t == TransportKind::Tcp ? "tcp" : "in-process";
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["dataset"]["kind"] = dataset.kind;
  j["dataset"]["generator"] = dataset.generator;
  j["dataset"]["rows"] = dataset.rows;
  j["dataset"]["csv"] = dataset.csv_path;
  j["dataset"]["schema"] = dataset.schema_path;

  j["federation"]["clients"] = federation.clients;
  j["federation"]["coordinator"] = federation.coordinator_id;
  j["federation"]["transport"] = transport_to_string(federation.transport);
  if (federation.permutation_seed.has_value()) {
    j["federation"]["permutation_seed"] = *federation.permutation_seed;
  } else {
    j["federation"]["permutation_seed"] = nullptr;
  }
  j["federation"]["decode_mode"] =
      federation.decode_mode == DecodeMode::Sample ? "sample" : "mode";

  j["autoencoder"]["hidden_total"] = federation.ae_hidden_total;
  j["autoencoder"]["layers"] = federation.ae_layers;
  j["autoencoder"]["epochs"] = federation.ae_epochs;
  j["autoencoder"]["batch"] = federation.ae_batch;
  j["autoencoder"]["lr"] = federation.ae_lr;

  const auto& d = federation.diffusion;
  j["diffusion"]["timesteps"] = d.timesteps;
  j["diffusion"]["inference_steps"] = d.inference_steps;
  j["diffusion"]["beta_min"] = d.beta_min;
  j["diffusion"]["beta_max"] = d.beta_max;
  j["diffusion"]["depth"] = d.backbone_depth;
  j["diffusion"]["hidden"] = d.backbone_hidden;
  j["diffusion"]["time_embedding"] = d.time_embedding_dim;
  j["diffusion"]["dropout"] = d.dropout;
  j["diffusion"]["train_iters"] = d.train_iters;
  j["diffusion"]["batch"] = d.batch_size;
  j["diffusion"]["lr"] = d.lr;

  j["metrics"]["histogram_bins"] = metrics.histogram_bins;
  j["metrics"]["decile_bins"] = metrics.decile_bins;
  j["metrics"]["learner_hidden"] = metrics.learner_hidden;
  j["metrics"]["learner_epochs"] = metrics.learner_epochs;
  j["metrics"]["learner_batch"] = metrics.learner_batch;
  j["metrics"]["learner_lr"] = metrics.learner_lr;

  j["attacks"]["n_predicates"] = attacks.n_predicates;
  j["attacks"]["n_targets"] = attacks.n_targets;
  j["attacks"]["neighbors"] = attacks.neighbors;
  j["attacks"]["rare_category_max_freq"] = attacks.rare_category_max_freq;
  j["attacks"]["continuous_tolerance"] = attacks.continuous_tolerance;

  j["output_dir"] = output_dir;
  j["master_seed"] = master_seed;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(kModule, "config", std::string("bad JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("dataset")) {
      const auto& ds = j["dataset"];
      if (ds.contains("kind")) cfg.dataset.kind = ds["kind"].get<std::string>();
      if (ds.contains("generator")) cfg.dataset.generator = ds["generator"].get<std::string>();
      if (ds.contains("rows")) cfg.dataset.rows = ds["rows"].get<int64_t>();
      if (ds.contains("csv")) cfg.dataset.csv_path = ds["csv"].get<std::string>();
      if (ds.contains("schema")) cfg.dataset.schema_path = ds["schema"].get<std::string>();
    }
    if (j.contains("federation")) {
      const auto& f = j["federation"];
      if (f.contains("clients")) cfg.federation.clients = f["clients"].get<int64_t>();
      if (f.contains("coordinator")) cfg.federation.coordinator_id = f["coordinator"].get<int>();
      if (f.contains("transport")) {
        cfg.federation.transport = transport_from_string(f["transport"].get<std::string>());
      }
      if (f.contains("permutation_seed") && !f["permutation_seed"].is_null()) {
        cfg.federation.permutation_seed = f["permutation_seed"].get<uint64_t>();
      }
      if (f.contains("decode_mode")) {
        cfg.federation.decode_mode = f["decode_mode"].get<std::string>() == "sample"
                                         ? DecodeMode::Sample
                                         : DecodeMode::Mode;
      }
    }
    if (j.contains("autoencoder")) {
      const auto& a = j["autoencoder"];
      if (a.contains("hidden_total")) cfg.federation.ae_hidden_total = a["hidden_total"].get<int64_t>();
      if (a.contains("layers")) cfg.federation.ae_layers = a["layers"].get<int64_t>();
      if (a.contains("epochs")) cfg.federation.ae_epochs = a["epochs"].get<int64_t>();
      if (a.contains("batch")) cfg.federation.ae_batch = a["batch"].get<int64_t>();
      if (a.contains("lr")) cfg.federation.ae_lr = a["lr"].get<double>();
    }
    if (j.contains("diffusion")) {
      const auto& d = j["diffusion"];
      auto& dc = cfg.federation.diffusion;
      if (d.contains("timesteps")) dc.timesteps = d["timesteps"].get<int64_t>();
      if (d.contains("inference_steps")) dc.inference_steps = d["inference_steps"].get<int64_t>();
      if (d.contains("beta_min")) dc.beta_min = d["beta_min"].get<double>();
      if (d.contains("beta_max")) dc.beta_max = d["beta_max"].get<double>();
      if (d.contains("depth")) dc.backbone_depth = d["depth"].get<int64_t>();
      if (d.contains("hidden")) dc.backbone_hidden = d["hidden"].get<int64_t>();
      if (d.contains("time_embedding")) dc.time_embedding_dim = d["time_embedding"].get<int64_t>();
      if (d.contains("dropout")) dc.dropout = d["dropout"].get<double>();
      if (d.contains("train_iters")) dc.train_iters = d["train_iters"].get<int64_t>();
      if (d.contains("batch")) dc.batch_size = d["batch"].get<int64_t>();
      if (d.contains("lr")) dc.lr = d["lr"].get<double>();
    }
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      if (m.contains("histogram_bins")) cfg.metrics.histogram_bins = m["histogram_bins"].get<int64_t>();
      if (m.contains("decile_bins")) cfg.metrics.decile_bins = m["decile_bins"].get<int64_t>();
      if (m.contains("learner_hidden")) cfg.metrics.learner_hidden = m["learner_hidden"].get<int64_t>();
      if (m.contains("learner_epochs")) cfg.metrics.learner_epochs = m["learner_epochs"].get<int64_t>();
      if (m.contains("learner_batch")) cfg.metrics.learner_batch = m["learner_batch"].get<int64_t>();
      if (m.contains("learner_lr")) cfg.metrics.learner_lr = m["learner_lr"].get<double>();
    }
    if (j.contains("attacks")) {
      const auto& a = j["attacks"];
      if (a.contains("n_predicates")) cfg.attacks.n_predicates = a["n_predicates"].get<int64_t>();
      if (a.contains("n_targets")) cfg.attacks.n_targets = a["n_targets"].get<int64_t>();
      if (a.contains("neighbors")) cfg.attacks.neighbors = a["neighbors"].get<int64_t>();
      if (a.contains("rare_category_max_freq")) {
        cfg.attacks.rare_category_max_freq = a["rare_category_max_freq"].get<double>();
      }
      if (a.contains("continuous_tolerance")) {
        cfg.attacks.continuous_tolerance = a["continuous_tolerance"].get<double>();
      }
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<uint64_t>();
  } catch (const json::exception& e) {
    throw Error(kModule, "config", std::string("bad config field: ") + e.what());
  }
  cfg.federation.master_seed = cfg.master_seed;
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_json(read_file(path));
}

void ExperimentConfig::save(const std::string& path) const { write_file(path, to_json()); }

std::string ExperimentConfig::config_hash() const {
  const std::string dump = to_json();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : dump) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::run_dir() const {
  return (fs::path(output_dir) / config_hash()).string();
}

void ExperimentConfig::validate() const {
  if (dataset.kind == "csv") {
    if (!fs::exists(dataset.csv_path)) {
      throw Error(kModule, "config", "csv path '" + dataset.csv_path + "' does not exist");
    }
    if (!fs::exists(dataset.schema_path)) {
      throw Error(kModule, "config", "schema path '" + dataset.schema_path + "' does not exist");
    }
  } else if (dataset.kind != "generator") {
    throw Error(kModule, "config", "dataset kind must be 'csv' or 'generator'");
  }
  if (federation.clients < 1) throw Error(kModule, "config", "need at least one client");
  const int64_t d = dataset.kind == "generator"
                        ? make_builtin_dataset(dataset.generator, 1, 0).column_count()
                        : read_schema_file(dataset.schema_path).width();
  if (federation.clients > d) {
    throw Error(kModule, "config",
                "client count " + std::to_string(federation.clients) + " exceeds column count " +
                    std::to_string(d));
  }
  if (federation.diffusion.inference_steps > federation.diffusion.timesteps) {
    throw Error(kModule, "config", "inference steps cannot exceed timesteps");
  }
}

Table ExperimentConfig::materialize_dataset() const {
  if (dataset.kind == "csv") {
    return ingest_csv(dataset.csv_path, read_schema_file(dataset.schema_path));
  }
  return make_builtin_dataset(dataset.generator, dataset.rows,
                              derive_seed(master_seed, "dataset", 0));
}

Table ExperimentConfig::materialize_holdout(int64_t rows) const {
  if (dataset.kind == "csv") {
    const Table full = ingest_csv(dataset.csv_path, read_schema_file(dataset.schema_path));
    return full.tail(rows);
  }
  return make_builtin_dataset(dataset.generator, rows, derive_seed(master_seed, "holdout", 0));
}

// --- artifact persistence -------------------------------------------------------

namespace {

json schema_to_json(const Schema& schema) {
  json out = json::array();
  for (const auto& col : schema.columns) {
    json c;
    c["name"] = col.name;
    c["kind"] = col.is_categorical() ? "categorical" : "continuous";
    c["categories"] = col.categories;
    out.push_back(c);
  }
  return out;
}

Schema schema_from_json(const json& j) {
  Schema schema;
  for (const auto& c : j) {
    ColumnSpec col;
    col.name = c["name"].get<std::string>();
    col.kind = c["kind"].get<std::string>() == "categorical" ? ColumnKind::Categorical
                                                             : ColumnKind::Continuous;
    col.categories = c["categories"].get<std::vector<std::string>>();
    schema.columns.push_back(std::move(col));
  }
  schema.validate();
  return schema;
}

}  // namespace

void save_artifacts(const StackedArtifacts& artifacts, const std::string& directory) {
  fs::create_directories(directory);
  json meta;
  meta["schema"] = schema_to_json(artifacts.schema);
  meta["clients"] = artifacts.config.clients;
  meta["coordinator"] = artifacts.config.coordinator_id;
  meta["decode_mode"] =
      artifacts.config.decode_mode == DecodeMode::Sample ? "sample" : "mode";
  meta["master_seed"] = artifacts.config.master_seed;
  meta["transport"] = transport_to_string(artifacts.config.transport);

  json partition = json::array();
  for (const auto& block : artifacts.partition.assignment) partition.push_back(block);
  meta["partition"] = partition;

  const auto& d = artifacts.config.diffusion;
  meta["diffusion"]["timesteps"] = d.timesteps;
  meta["diffusion"]["inference_steps"] = d.inference_steps;
  meta["diffusion"]["beta_min"] = d.beta_min;
  meta["diffusion"]["beta_max"] = d.beta_max;
  meta["diffusion"]["time_embedding"] = d.time_embedding_dim;
  meta["latent_means"] = vector_to_json(artifacts.model.latent_means);
  meta["latent_stds"] = vector_to_json(artifacts.model.latent_stds);

  json clients = json::array();
  for (const auto& client : artifacts.clients) {
    json c;
    c["id"] = client.client_id;
    c["columns"] = client.columns;
    c["normalizer_means"] = vector_to_json(client.normalizer.means);
    c["normalizer_stds"] = vector_to_json(client.normalizer.stddevs);
    clients.push_back(c);
  }
  meta["client_artifacts"] = clients;
  write_file((fs::path(directory) / "meta.json").string(), meta.dump(2));

  for (const auto& client : artifacts.clients) {
    const std::string stem = "client_" + std::to_string(client.client_id);
    save_mlp_file(client.autoencoder.encoder,
                  (fs::path(directory) / (stem + "_encoder.bin")).string());
    save_mlp_file(client.autoencoder.decoder,
                  (fs::path(directory) / (stem + "_decoder.bin")).string());
  }
  save_mlp_file(artifacts.model.backbone, (fs::path(directory) / "backbone.bin").string());
}

StackedArtifacts load_artifacts(const std::string& directory) {
  const auto meta_path = (fs::path(directory) / "meta.json").string();
  if (!fs::exists(meta_path)) {
    throw Error(kModule, "load_artifacts", "missing artifacts at '" + directory + "'");
  }
  json meta = json::parse(read_file(meta_path));

  StackedArtifacts artifacts;
  artifacts.schema = schema_from_json(meta["schema"]);
  artifacts.config.clients = meta["clients"].get<int64_t>();
  artifacts.config.coordinator_id = meta["coordinator"].get<int>();
  artifacts.config.decode_mode =
      meta["decode_mode"].get<std::string>() == "sample" ? DecodeMode::Sample : DecodeMode::Mode;
  artifacts.config.master_seed = meta["master_seed"].get<uint64_t>();
  artifacts.config.transport = transport_from_string(meta["transport"].get<std::string>());

  artifacts.partition.client_count = artifacts.config.clients;
  for (const auto& block : meta["partition"]) {
    artifacts.partition.assignment.push_back(block.get<std::vector<int64_t>>());
  }
  artifacts.partition.validate(artifacts.schema.width());

  auto& d = artifacts.config.diffusion;
  d.timesteps = meta["diffusion"]["timesteps"].get<int64_t>();
  d.inference_steps = meta["diffusion"]["inference_steps"].get<int64_t>();
  d.beta_min = meta["diffusion"]["beta_min"].get<double>();
  d.beta_max = meta["diffusion"]["beta_max"].get<double>();
  d.time_embedding_dim = meta["diffusion"]["time_embedding"].get<int64_t>();

  for (const auto& c : meta["client_artifacts"]) {
    ClientArtifacts client;
    client.client_id = c["id"].get<int>();
    client.columns = c["columns"].get<std::vector<int64_t>>();
    client.normalizer.means = c["normalizer_means"].get<std::vector<double>>();
    client.normalizer.stddevs = c["normalizer_stds"].get<std::vector<double>>();
    for (int64_t col : client.columns) {
      client.block_schema.columns.push_back(artifacts.schema.at(col));
    }
    const std::string stem = "client_" + std::to_string(client.client_id);
    client.autoencoder.block_schema = client.block_schema;
    client.autoencoder.heads = DecoderHeads::for_schema(client.block_schema);
    client.autoencoder.encoder =
        load_mlp_file((fs::path(directory) / (stem + "_encoder.bin")).string());
    client.autoencoder.decoder =
        load_mlp_file((fs::path(directory) / (stem + "_decoder.bin")).string());
    artifacts.clients.push_back(std::move(client));
  }

  artifacts.model.schedule = make_schedule(d.timesteps, d.beta_min, d.beta_max);
  artifacts.model.time_embedding.dim = d.time_embedding_dim;
  artifacts.model.backbone = load_mlp_file((fs::path(directory) / "backbone.bin").string());
  artifacts.model.latent_means = meta["latent_means"].get<std::vector<double>>();
  artifacts.model.latent_stds = meta["latent_stds"].get<std::vector<double>>();
  artifacts.model.latent_dim = static_cast<int64_t>(artifacts.model.latent_means.size());
  return artifacts;
}

// --- commands -------------------------------------------------------------------

TrainOutcome cmd_train(const ExperimentConfig& config) {
  config.validate();
  const Table table = config.materialize_dataset();
  FederationConfig fed = config.federation;
  fed.master_seed = config.master_seed;
  const StackedArtifacts artifacts = run_stacked_training(fed, table);

  const std::string dir = config.run_dir();
  fs::create_directories(dir);
  config.save((fs::path(dir) / "config.json").string());
  write_schema_file(table.schema, (fs::path(dir) / "schema.txt").string());
  emit_csv(table, (fs::path(dir) / "real.csv").string());
  save_artifacts(artifacts, (fs::path(dir) / "artifacts").string());
  artifacts.transcript.write_csv((fs::path(dir) / "transcript_train.csv").string());

  TrainOutcome outcome;
  outcome.run_directory = dir;
  outcome.transcript_bytes = artifacts.transcript.total_bytes();
  outcome.transcript_messages = static_cast<int64_t>(artifacts.transcript.records().size());
  return outcome;
}

SynthesizeOutcome cmd_synthesize(const ExperimentConfig& config, int64_t rows, bool share,
                                 std::optional<int> requester) {
  const std::string dir = config.run_dir();
  StackedArtifacts artifacts = load_artifacts((fs::path(dir) / "artifacts").string());
  // Transport for synthesis follows the current config, not the training run.
  artifacts.config.transport = config.federation.transport;
  const int who = requester.value_or(artifacts.config.clients >= 2 ? 2 : 1);
  const SynthesisResult result = run_synthesis(artifacts, rows, who);

  SynthesizeOutcome outcome;
  outcome.transcript_messages = static_cast<int64_t>(result.transcript.records().size());
  result.transcript.write_csv((fs::path(dir) / "transcript_synthesis.csv").string());
  for (size_t i = 0; i < result.client_blocks.size(); ++i) {
    const std::string path =
        (fs::path(dir) / ("client_" + std::to_string(i + 1) + "_synthetic.csv")).string();
    emit_csv(result.client_blocks[i], path);
    outcome.client_csvs.push_back(path);
  }
  if (share) {
    const std::string path = (fs::path(dir) / "synthetic.csv").string();
    emit_csv(result.merged(artifacts), path);
    outcome.merged_csv = path;
  }
  return outcome;
}

EvaluateOutcome cmd_evaluate(const ExperimentConfig& config, const std::string& real_csv,
                             const std::string& synth_csv,
                             const std::optional<std::string>& holdout_csv,
                             const std::string& schema_path, const std::string& out_dir) {
  const Schema schema = read_schema_file(schema_path);
  const Table real = ingest_csv(real_csv, schema);
  const Table synth = ingest_csv(synth_csv, schema);

  Rng rng(derive_seed(config.master_seed, "evaluate", 0));
  ScoreReport report = resemblance(real, synth, rng, config.metrics);
  if (holdout_csv.has_value()) {
    const Table holdout = ingest_csv(*holdout_csv, schema);
    Rng utility_rng(derive_seed(config.master_seed, "evaluate-utility", 0));
    report.utility = utility_score(real, synth, holdout, utility_rng, config.metrics);
  }
  report.seed = config.master_seed;
  report.dataset = real_csv;
  report.model = synth_csv;

  fs::create_directories(out_dir);
  EvaluateOutcome outcome;
  outcome.report = report;
  outcome.report_json_path = (fs::path(out_dir) / "report.json").string();
  outcome.report_csv_path = (fs::path(out_dir) / "report.csv").string();
  outcome.histogram_dir = (fs::path(out_dir) / "histograms").string();
  write_file(outcome.report_json_path, report.to_json());
  write_file(outcome.report_csv_path, ScoreReport::csv_header() + "\n" + report.csv_row() + "\n");
  write_histograms(real, synth, outcome.histogram_dir, config.metrics.histogram_bins);
  return outcome;
}

AttackOutcome cmd_attack(const ExperimentConfig& config, const std::string& real_csv,
                         const std::string& synth_csv, const std::string& control_csv,
                         const std::string& schema_path, const std::string& out_dir) {
  const Schema schema = read_schema_file(schema_path);
  const Table real = ingest_csv(real_csv, schema);
  const Table synth = ingest_csv(synth_csv, schema);
  const Table control = ingest_csv(control_csv, schema);

  Rng rng(derive_seed(config.master_seed, "attack", 0));
  AttackOutcome outcome;
  outcome.result = run_privacy_suite(real, control, synth, config.attacks, rng);
  fs::create_directories(out_dir);
  outcome.json_path = (fs::path(out_dir) / "privacy.json").string();
  write_file(outcome.json_path, outcome.result.to_json());
  return outcome;
}

CompareCommOutcome cmd_compare_comm(const ExperimentConfig& config,
                                    const std::vector<int64_t>& iteration_counts,
                                    const std::string& out_dir) {
  config.validate();
  const Table table = config.materialize_dataset();
  FederationConfig fed = config.federation;
  fed.master_seed = config.master_seed;
  const auto partition = fed.resolve_partition(table.column_count());
  std::vector<int64_t> latent_widths;
  for (const auto& block : partition.assignment) {
    latent_widths.push_back(fed.ae_latent_override.value_or(static_cast<int64_t>(block.size())));
  }
  const int64_t batch =
      std::min<int64_t>(std::max<int64_t>(1, fed.diffusion.batch_size), table.row_count());

  CompareCommOutcome outcome;
  for (int64_t iters : iteration_counts) {
    // Stacked training communicates the same bytes regardless of epochs /
    // iterations; run it once per variant row to prove it.
    FederationConfig stacked_cfg = fed;
    stacked_cfg.diffusion.train_iters = iters;
    const StackedArtifacts stacked = run_stacked_training(stacked_cfg, table);
    CommRow stacked_row;
    stacked_row.variant = "Stacked";
    stacked_row.iterations = iters;
    stacked_row.total_bytes = stacked.transcript.total_bytes();
    stacked_row.payload_bytes = stacked.transcript.total_payload_bytes();
    stacked_row.rounds = stacked.transcript.round_count();
    stacked_row.messages = static_cast<int64_t>(stacked.transcript.records().size());
    outcome.rows.push_back(stacked_row);

    const E2EArtifacts e2e = run_e2e_distr_training(fed, table, iters);
    CommRow e2e_row;
    e2e_row.variant = "E2EDistr";
    e2e_row.iterations = iters;
    e2e_row.total_bytes = e2e.transcript.total_bytes();
    e2e_row.payload_bytes = e2e.transcript.total_payload_bytes();
    e2e_row.rounds = e2e.transcript.round_count();
    e2e_row.messages = static_cast<int64_t>(e2e.transcript.records().size());
    outcome.rows.push_back(e2e_row);

    const OneHotCostReport onehot =
        hypothetical_onehot_cost(table.schema, partition, iters, batch, latent_widths);
    CommRow onehot_row;
    onehot_row.variant = "HypotheticalOneHot";
    onehot_row.iterations = iters;
    onehot_row.total_bytes = onehot.one_hot_total_bytes;
    onehot_row.payload_bytes = onehot.one_hot_payload_per_iteration * iters;
    onehot_row.rounds = iters;
    onehot_row.messages = 4 * fed.clients * iters;
    outcome.rows.push_back(onehot_row);
  }

  fs::create_directories(out_dir);
  outcome.csv_path = (fs::path(out_dir) / "comparison.csv").string();
  std::ostringstream csv;
  csv << "variant,iterations,total_bytes,payload_bytes,rounds,messages\n";
  for (const auto& row : outcome.rows) {
    csv << row.variant << ',' << row.iterations << ',' << row.total_bytes << ','
        << row.payload_bytes << ',' << row.rounds << ',' << row.messages << '\n';
  }
  write_file(outcome.csv_path, csv.str());
  return outcome;
}

RobustnessOutcome cmd_robustness(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  const Table table = config.materialize_dataset();
  const Table holdout = config.materialize_holdout(std::max<int64_t>(200, table.row_count() / 5));

  RobustnessOutcome outcome;
  for (const int64_t clients : {int64_t{4}, int64_t{8}}) {
    for (const bool permuted : {false, true}) {
      ExperimentConfig cell_cfg = config;
      cell_cfg.federation.clients = clients;
      if (permuted) {
        cell_cfg.federation.permutation_seed = 12343;  // the published shuffle seed
      } else {
        cell_cfg.federation.permutation_seed.reset();
      }
      FederationConfig fed = cell_cfg.federation;
      fed.master_seed = cell_cfg.master_seed;
      const StackedArtifacts artifacts = run_stacked_training(fed, table);
      const SynthesisResult synthesis =
          run_synthesis(artifacts, table.row_count(), artifacts.config.clients >= 2 ? 2 : 1);
      const Table merged = synthesis.merged(artifacts);

      Rng rng(derive_seed(config.master_seed, "robustness",
                          static_cast<uint64_t>(clients * 2 + permuted)));
      const ScoreReport report = resemblance(table, merged, rng, config.metrics);
      Rng utility_rng(derive_seed(config.master_seed, "robustness-utility",
                                  static_cast<uint64_t>(clients * 2 + permuted)));
      const double utility = utility_score(table, merged, holdout, utility_rng, config.metrics);

      RobustnessCell cell;
      cell.clients = clients;
      cell.permuted = permuted;
      cell.resemblance = report.resemblance;
      cell.utility = utility;
      outcome.cells.push_back(cell);
    }
  }

  fs::create_directories(out_dir);
  outcome.csv_path = (fs::path(out_dir) / "robustness.csv").string();
  std::ostringstream csv;
  csv << "clients,permutation,resemblance,utility\n";
  for (const auto& cell : outcome.cells) {
    csv << cell.clients << ',' << (cell.permuted ? "seed12343" : "default") << ','
        << cell.resemblance << ',' << cell.utility << '\n';
  }
  write_file(outcome.csv_path, csv.str());
  return outcome;
}

}  // namespace silofuse
