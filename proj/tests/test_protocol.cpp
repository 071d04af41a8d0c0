#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <variant>

#include "silofuse/dataset.hpp"
#include "silofuse/error.hpp"
#include "silofuse/protocol.hpp"

using namespace silofuse;

namespace {

// The payload universe must not be able to carry original-space cells: no
// alternative is a Table (or anything holding a Schema).
template <typename T, typename Variant>
struct holds_alternative_type;
template <typename T, typename... Ts>
struct holds_alternative_type<T, std::variant<Ts...>>
    : std::bool_constant<(std::is_same_v<T, Ts> || ...)> {};

static_assert(!holds_alternative_type<Table, MessagePayload>::value,
              "message payloads must never carry original-space tables");
static_assert(holds_alternative_type<LatentPayload, MessagePayload>::value);
static_assert(holds_alternative_type<RowCountPayload, MessagePayload>::value);

FederationConfig tiny_config(int64_t clients, TransportKind transport = TransportKind::InProcess) {
  FederationConfig cfg;
  cfg.clients = clients;
  cfg.transport = transport;
  cfg.master_seed = 91;
  cfg.ae_hidden_total = 64;
  cfg.ae_epochs = 8;
  cfg.ae_batch = 64;
  cfg.diffusion.timesteps = 50;
  cfg.diffusion.inference_steps = 10;
  cfg.diffusion.backbone_depth = 3;
  cfg.diffusion.backbone_hidden = 16;
  cfg.diffusion.train_iters = 60;
  cfg.diffusion.batch_size = 64;
  return cfg;
}

Table wide_table(int64_t rows, int64_t columns, uint64_t seed) {
  Rng rng(seed);
  Table t;
  for (int64_t c = 0; c < columns; ++c) {
    t.schema.columns.push_back(ColumnSpec::continuous("g" + std::to_string(c)));
  }
  t.cells = rng.normal_matrix(rows, columns);
  return t;
}

}  // namespace

TEST_CASE("message byte model: scalars x4 plus a 64-byte header") {
  CHECK(message_bytes(0) == 64);
  CHECK(message_bytes(1000 * 3) == 1000 * 3 * 4 + 64);
}

TEST_CASE("stacked training uploads once per client with the documented bytes") {
  // d=12, M=4 -> s_i = 3 each; n=1000.
  const Table table = wide_table(1000, 12, 5);
  FederationConfig cfg = tiny_config(4);
  const auto artifacts = run_stacked_training(cfg, table);

  const auto& t = artifacts.transcript;
  CHECK(t.records().size() == 4);
  CHECK(t.count_of(MessageKind::LatentUpload) == 4);
  CHECK(t.round_count() == 1);
  for (const auto& rec : t.records()) {
    CHECK(rec.bytes == 1000 * 3 * 4 + 64);
    CHECK(rec.receiver == cfg.coordinator_id);
  }
  CHECK(t.total_bytes() == 4 * (1000 * 3 * 4 + 64));
  CHECK(t.total_bytes() == stacked_upload_bytes(1000, std::vector<int64_t>{3, 3, 3, 3}));
}

TEST_CASE("stacked transcript is invariant to epoch and iteration counts") {
  const Table table = make_correlated_fixture(300, 6);
  FederationConfig base = tiny_config(3);
  base.ae_epochs = 2;
  base.diffusion.train_iters = 10;
  const auto a = run_stacked_training(base, table);

  FederationConfig more = base;
  more.ae_epochs = 9;
  more.diffusion.train_iters = 200;
  more.ae_batch = 16;
  more.diffusion.batch_size = 32;
  const auto b = run_stacked_training(more, table);

  CHECK(a.transcript == b.transcript);
  CHECK(a.transcript.total_bytes() == b.transcript.total_bytes());
}

TEST_CASE("M=1 collapses to the centralized pipeline with identical trajectories") {
  const Table table = make_correlated_fixture(256, 7);
  FederationConfig cfg = tiny_config(1);
  const auto artifacts = run_stacked_training(cfg, table);
  CHECK(artifacts.transcript.records().size() == 1);

  // Monolithic run out of the same building blocks and seed streams.
  const auto norm = fit_normalizer(table);
  const Table normalized = norm.apply(table);
  const auto ae_cfg = cfg.client_autoencoder_config(table.column_count());
  Rng init(derive_seed(cfg.master_seed, "ae-init", 1));
  Autoencoder ae = make_autoencoder(table.schema, ae_cfg, init);
  Rng train_rng(derive_seed(cfg.master_seed, "ae-train", 1));
  train_autoencoder(ae, normalized, ae_cfg, train_rng);
  const Matrix latents = encode(ae, normalized);

  Rng diff_init(derive_seed(cfg.master_seed, "diffusion-init", 0));
  DiffusionModel model = make_diffusion_model(latents.cols(), cfg.diffusion, diff_init);
  Rng diff_train(derive_seed(cfg.master_seed, "diffusion-train", 0));
  train_diffusion(model, latents, cfg.diffusion, diff_train);

  REQUIRE(artifacts.clients.size() == 1);
  for (size_t i = 0; i < model.backbone.layers.size(); ++i) {
    CHECK(artifacts.model.backbone.layers[i].weight == model.backbone.layers[i].weight);
    CHECK(artifacts.model.backbone.layers[i].bias == model.backbone.layers[i].bias);
  }
  for (size_t i = 0; i < ae.encoder.layers.size(); ++i) {
    CHECK(artifacts.clients[0].autoencoder.encoder.layers[i].weight ==
          ae.encoder.layers[i].weight);
  }
}

TEST_CASE("synthesis: M+1 messages, aligned widths, deterministic output") {
  const Table table = make_correlated_fixture(300, 8);
  FederationConfig cfg = tiny_config(4);
  const auto artifacts = run_stacked_training(cfg, table);

  const auto result = run_synthesis(artifacts, 120, 2);
  CHECK(result.transcript.records().size() == 5);  // M + 1
  CHECK(result.transcript.count_of(MessageKind::SynthesisRequest) == 1);
  CHECK(result.transcript.count_of(MessageKind::LatentPartition) == 4);

  REQUIRE(result.client_blocks.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(result.client_blocks[i].row_count() == 120);
    CHECK(result.client_blocks[i].column_count() ==
          static_cast<int64_t>(artifacts.partition.assignment[i].size()));
  }

  // Row alignment: merged table carries the original schema.
  const Table merged = result.merged(artifacts);
  CHECK(merged.schema == table.schema);
  merged.validate();

  // Determinism under the derived synthesis seed.
  const auto again = run_synthesis(artifacts, 120, 2);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(again.client_blocks[i].cells == result.client_blocks[i].cells);
  }
  // ...and a different seed changes the draw.
  const auto other = run_synthesis(artifacts, 120, 2, std::nullopt, 999);
  CHECK(other.client_blocks[0].cells != result.client_blocks[0].cells);
}

TEST_CASE("synthesis keeps row alignment under a permuted partition") {
  const Table table = make_correlated_fixture(200, 9);
  FederationConfig cfg = tiny_config(3);
  cfg.permutation_seed = 12343;
  const auto artifacts = run_stacked_training(cfg, table);
  const auto result = run_synthesis(artifacts, 50, 1);
  const Table merged = result.merged(artifacts);
  CHECK(merged.schema == table.schema);
  merged.validate();
}

TEST_CASE("e2e training: 4 messages per client per iteration, exactly linear bytes") {
  const Table table = wide_table(600, 12, 11);
  FederationConfig cfg = tiny_config(4);
  cfg.diffusion.batch_size = 512;
  cfg.ae_hidden_total = 32;
  cfg.diffusion.backbone_hidden = 8;
  cfg.diffusion.backbone_depth = 2;

  const auto one = run_e2e_distr_training(cfg, table, 1);
  // s_i = 3, batch 512: each boundary-direction message is 512*3 scalars.
  CHECK(one.transcript.records().size() == 16);  // 4 kinds x 4 clients
  for (const auto& rec : one.transcript.records()) {
    CHECK(rec.scalar_count == 512 * 3);
    CHECK(rec.bytes == 512 * 3 * 4 + 64);
  }
  CHECK(one.transcript.count_of(MessageKind::ForwardActivations) == 8);
  CHECK(one.transcript.count_of(MessageKind::BackwardGradients) == 8);

  const std::vector<int64_t> widths{3, 3, 3, 3};
  CHECK(one.transcript.total_bytes() == e2e_training_bytes(widths, 512, 1));

  const auto ten = run_e2e_distr_training(cfg, table, 10);
  const auto twenty = run_e2e_distr_training(cfg, table, 20);
  CHECK(ten.transcript.total_bytes() == 10 * one.transcript.total_bytes());
  CHECK(twenty.transcript.total_bytes() == 2 * ten.transcript.total_bytes());
  CHECK(ten.transcript.round_count() == 10);
  CHECK(twenty.joint_loss.size() == 20);

  const auto zero = run_e2e_distr_training(cfg, table, 0);
  CHECK(zero.transcript.records().empty());
}

TEST_CASE("one-hot byte model: ratios and dominance") {
  // All-continuous schema: ratio exactly 1.
  const Table cont = wide_table(100, 4, 13);
  const auto part2 = partition_equal(4, 2);
  const std::vector<int64_t> widths2{2, 2};
  const auto report = hypothetical_onehot_cost(cont.schema, part2, 100, 64, widths2);
  CHECK(report.expansion_ratio == 1.0);
  CHECK(report.one_hot_total_bytes == report.e2e_total_bytes);

  // One k=100 categorical among 2 columns, one client: width 101 vs 2.
  Schema mixed;
  mixed.columns.push_back(ColumnSpec::continuous("x"));
  std::vector<std::string> cats;
  for (int i = 0; i < 100; ++i) cats.push_back("c" + std::to_string(i));
  mixed.columns.push_back(ColumnSpec::categorical("k", cats));
  const auto part1 = partition_equal(2, 1);
  const std::vector<int64_t> widths1{2};
  const auto mixed_report = hypothetical_onehot_cost(mixed, part1, 10, 32, widths1);
  REQUIRE(mixed_report.one_hot_widths.size() == 1);
  CHECK(mixed_report.one_hot_widths[0] == 101);
  CHECK(mixed_report.latent_widths[0] == 2);
  CHECK(mixed_report.expansion_ratio == doctest::Approx(101.0 / 2.0));

  // Ratio ordering tracks one_hot_width over random schemas.
  Rng rng(14);
  double last_ratio = -1.0;
  int64_t last_width = -1;
  for (int trial = 0; trial < 20; ++trial) {
    Schema schema;
    const int64_t d = 4;
    for (int64_t c = 0; c < d; ++c) {
      if (rng.uniform01() < 0.5) {
        schema.columns.push_back(ColumnSpec::continuous("x" + std::to_string(c)));
      } else {
        std::vector<std::string> cs;
        const int64_t k = rng.uniform_int(2, 30);
        for (int64_t j = 0; j < k; ++j) cs.push_back("v" + std::to_string(j));
        schema.columns.push_back(ColumnSpec::categorical("k" + std::to_string(c), cs));
      }
    }
    const auto part = partition_equal(d, 2);
    const std::vector<int64_t> widths{2, 2};
    const auto rep = hypothetical_onehot_cost(schema, part, 10, 32, widths);
    if (last_width >= 0) {
      if (one_hot_width(schema) > last_width) CHECK(rep.expansion_ratio > last_ratio);
      if (one_hot_width(schema) < last_width) CHECK(rep.expansion_ratio < last_ratio);
    }
    last_width = one_hot_width(schema);
    last_ratio = rep.expansion_ratio;
    CHECK(rep.one_hot_total_bytes >= rep.e2e_total_bytes);
  }
}

TEST_CASE("tcp and in-process transports agree on transcripts and models") {
  const Table table = make_correlated_fixture(200, 17);
  FederationConfig in_proc = tiny_config(3, TransportKind::InProcess);
  FederationConfig tcp = tiny_config(3, TransportKind::Tcp);

  const auto a = run_stacked_training(in_proc, table);
  const auto b = run_stacked_training(tcp, table);
  CHECK(a.transcript == b.transcript);
  for (size_t i = 0; i < a.model.backbone.layers.size(); ++i) {
    CHECK(a.model.backbone.layers[i].weight == b.model.backbone.layers[i].weight);
  }

  const auto sa = run_synthesis(a, 64, 2);
  const auto sb = run_synthesis(b, 64, 2);
  CHECK(sa.transcript == sb.transcript);
  for (size_t i = 0; i < sa.client_blocks.size(); ++i) {
    CHECK(sa.client_blocks[i].cells == sb.client_blocks[i].cells);
  }

  const auto ea = run_e2e_distr_training(in_proc, table, 5);
  const auto eb = run_e2e_distr_training(tcp, table, 5);
  CHECK(ea.transcript == eb.transcript);
  for (size_t i = 0; i < ea.model.backbone.layers.size(); ++i) {
    CHECK(ea.model.backbone.layers[i].weight == eb.model.backbone.layers[i].weight);
  }
}

TEST_CASE("transcripts never carry original-space payload kinds") {
  const Table table = make_correlated_fixture(150, 19);
  FederationConfig cfg = tiny_config(3);
  const auto artifacts = run_stacked_training(cfg, table);
  const auto synth = run_synthesis(artifacts, 40, 3);
  const auto e2e = run_e2e_distr_training(cfg, table, 3);
  auto check_kinds = [](const Transcript& t) {
    for (const auto& rec : t.records()) {
      const bool known = rec.kind == MessageKind::LatentUpload ||
                         rec.kind == MessageKind::SynthesisRequest ||
                         rec.kind == MessageKind::LatentPartition ||
                         rec.kind == MessageKind::ForwardActivations ||
                         rec.kind == MessageKind::BackwardGradients;
      CHECK(known);
    }
  };
  check_kinds(artifacts.transcript);
  check_kinds(synth.transcript);
  check_kinds(e2e.transcript);
}

TEST_CASE("client autoencoder failure names the phase and client") {
  const Table table = make_correlated_fixture(64, 23);
  FederationConfig cfg = tiny_config(2);
  cfg.ae_lr = 1e155;  // forces divergence in phase 1
  CHECK_THROWS_WITH_AS(run_stacked_training(cfg, table), doctest::Contains("autoencoder"), Error);
}

TEST_CASE("config validation: coordinator id and partition mismatches") {
  const Table table = make_correlated_fixture(32, 29);
  FederationConfig cfg = tiny_config(2);
  cfg.coordinator_id = 5;
  CHECK_THROWS_AS(run_stacked_training(cfg, table), Error);

  FederationConfig bad_partition = tiny_config(2);
  VerticalPartition p;
  p.client_count = 2;
  p.assignment = {{0, 1}, {2}};  // misses columns 3 and 4
  bad_partition.partition = p;
  CHECK_THROWS_AS(run_stacked_training(bad_partition, table), Error);
}

TEST_CASE("transcript csv export lists round,kind,sender,receiver,bytes") {
  const Table table = make_correlated_fixture(100, 31);
  FederationConfig cfg = tiny_config(2);
  const auto artifacts = run_stacked_training(cfg, table);
  std::ostringstream out;
  artifacts.transcript.to_csv(out);
  const std::string csv = out.str();
  CHECK(csv.starts_with("round,kind,sender,receiver,bytes\n"));
  CHECK(csv.find("LatentUpload") != std::string::npos);
}
