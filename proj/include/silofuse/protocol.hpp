#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "silofuse/autoencoder.hpp"
#include "silofuse/diffusion.hpp"
#include "silofuse/table.hpp"

namespace silofuse {

// --- messages and byte accounting --------------------------------------------

enum class MessageKind : uint8_t {
  LatentUpload = 1,
  SynthesisRequest = 2,
  LatentPartition = 3,
  ForwardActivations = 4,
  BackwardGradients = 5,
};

const char* to_string(MessageKind kind);

struct LatentPayload {
  Matrix values;
};
struct RowCountPayload {
  int64_t rows = 0;
};

// The payload universe: latent-space matrices and row counts only. No
// alternative carries original-space cells, which is the point.
using MessagePayload = std::variant<std::monostate, LatentPayload, RowCountPayload>;

struct Message {
  MessageKind kind = MessageKind::LatentUpload;
  int sender = 0;
  int receiver = 0;
  int64_t round = 0;
  std::optional<int64_t> iteration;
  MessagePayload payload;
};

// Byte model: 4 bytes per scalar plus a fixed 64-byte header per message.
constexpr int64_t kBytesPerScalar = 4;
constexpr int64_t kMessageHeaderBytes = 64;

int64_t payload_scalar_count(const MessagePayload& payload);
int64_t message_bytes(int64_t scalar_count);

struct MessageRecord {
  MessageKind kind;
  int sender = 0;
  int receiver = 0;
  int64_t round = 0;
  std::optional<int64_t> iteration;
  int64_t scalar_count = 0;
  int64_t bytes = 0;

  bool operator==(const MessageRecord&) const = default;
};

/// Ordered log of protocol messages with byte sizes. Canonical order is
/// (round, sender, kind, receiver), which is identical across transports.
class Transcript {
 public:
  void record(MessageKind kind, int sender, int receiver, int64_t round,
              std::optional<int64_t> iteration, int64_t scalar_count);
  void canonicalize();

  const std::vector<MessageRecord>& records() const { return records_; }
  int64_t total_bytes() const;
  int64_t total_payload_bytes() const;  // scalar bytes only, headers excluded
  int64_t round_count() const;          // highest round seen
  int64_t count_of(MessageKind kind) const;
  int64_t bytes_of(MessageKind kind) const;

  void to_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;

  bool operator==(const Transcript&) const = default;

 private:
  std::vector<MessageRecord> records_;
};

// --- federation configuration -------------------------------------------------

enum class TransportKind { InProcess, Tcp };

struct FederationConfig {
  int64_t clients = 4;     // M
  int coordinator_id = 1;  // the coordinator role is held by client 1
  TransportKind transport = TransportKind::InProcess;
  std::optional<uint64_t> permutation_seed;   // column shuffle before splitting
  std::optional<VerticalPartition> partition; // overrides the equal split
  uint64_t master_seed = 1;

  // Autoencoder hyperparameters; hidden width is an equally partitioned
  // share of `ae_hidden_total`. Latent width s_i defaults to the client's
  // column count.
  int64_t ae_hidden_total = 1024;
  int64_t ae_layers = 3;
  int64_t ae_epochs = 200;  // e1
  int64_t ae_batch = 512;
  double ae_lr = 1e-3;
  std::optional<int64_t> ae_latent_override;

  DiffusionConfig diffusion;
  DecodeMode decode_mode = DecodeMode::Mode;

  AutoencoderConfig client_autoencoder_config(int64_t block_width) const;
  VerticalPartition resolve_partition(int64_t total_columns) const;
};

// --- stacked training / synthesis (Algorithms 1 and 2) ------------------------

struct ClientArtifacts {
  int client_id = 0;
  std::vector<int64_t> columns;  // original column indices of this block
  Schema block_schema;
  Normalizer normalizer;
  Autoencoder autoencoder;
  TrainingCurve curve;
};

struct StackedArtifacts {
  FederationConfig config;
  Schema schema;
  VerticalPartition partition;
  std::vector<ClientArtifacts> clients;
  DiffusionModel model;
  DiffusionCurve diffusion_curve;
  Transcript transcript;

  std::vector<int64_t> latent_widths() const;
  std::vector<int64_t> latent_offsets() const;  // prefix sums, size M+1
};

// Phase 1 trains all client autoencoders concurrently with zero messages;
// phase 2 uploads each client's latents once and trains the DDPM at the
// coordinator. The transcript is exactly M LatentUpload messages in round 1,
// independent of epoch counts.
StackedArtifacts run_stacked_training(const FederationConfig& config, const Table& table);

struct SynthesisResult {
  std::vector<Table> client_blocks;  // original-space blocks, row-aligned
  Transcript transcript;

  Table merged(const StackedArtifacts& artifacts) const;
};

// Coordinator samples noise, denoises, partitions the synthetic latents and
// sends each client its slice; clients decode locally. Exactly M+1 messages.
SynthesisResult run_synthesis(const StackedArtifacts& artifacts, int64_t rows, int requester_id,
                              std::optional<int64_t> inference_steps = std::nullopt,
                              std::optional<uint64_t> seed = std::nullopt);

// --- end-to-end distributed baseline ------------------------------------------

struct E2EClientArtifacts {
  int client_id = 0;
  std::vector<int64_t> columns;
  Schema block_schema;
  Normalizer normalizer;
  Autoencoder autoencoder;  // encoder/decoder trained jointly
  std::vector<double> reconstruction_loss;  // per iteration
};

struct E2EArtifacts {
  FederationConfig config;
  Schema schema;
  VerticalPartition partition;
  std::vector<E2EClientArtifacts> clients;
  DiffusionModel model;
  std::vector<double> diffusion_loss;  // per iteration
  std::vector<double> joint_loss;      // L_G + sum of client AE losses
  Transcript transcript;
};

// Joint training of encoders, backbone and decoders with per-iteration
// activation/gradient exchange on both the encoder and decoder boundaries;
// transcript bytes grow linearly in the iteration count.
E2EArtifacts run_e2e_distr_training(const FederationConfig& config, const Table& table,
                                    int64_t iterations);

// --- closed-form byte models ---------------------------------------------------

int64_t stacked_upload_bytes(int64_t rows, std::span<const int64_t> latent_widths);
int64_t e2e_bytes_per_iteration(std::span<const int64_t> widths, int64_t batch);
int64_t e2e_payload_bytes_per_iteration(std::span<const int64_t> widths, int64_t batch);
int64_t e2e_training_bytes(std::span<const int64_t> widths, int64_t batch, int64_t iterations);

struct OneHotCostReport {
  std::vector<int64_t> latent_widths;
  std::vector<int64_t> one_hot_widths;
  int64_t iterations = 0;
  int64_t batch = 0;
  int64_t e2e_total_bytes = 0;
  int64_t one_hot_total_bytes = 0;
  int64_t e2e_payload_per_iteration = 0;
  int64_t one_hot_payload_per_iteration = 0;
  double expansion_ratio = 1.0;  // one-hot payload / latent payload
};

// The E2EDistr byte model with per-client widths replaced by one-hot widths:
// what naively distributing a one-hot synthesizer would transfer.
OneHotCostReport hypothetical_onehot_cost(const Schema& schema, const VerticalPartition& partition,
                                          int64_t iterations, int64_t batch,
                                          std::span<const int64_t> latent_widths);

}  // namespace silofuse
