#include "silofuse/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "silofuse/error.hpp"
#include "transport.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "silo-protocol";

using transport::Link;
using transport::WireFrame;

Link make_link(TransportKind kind, int64_t clients) {
  return kind == TransportKind::Tcp ? transport::make_tcp_link(clients)
                                    : transport::make_in_process_link(clients);
}

WireFrame make_frame(MessageKind kind, int sender, int receiver, int64_t round,
                     std::vector<double> scalars) {
  WireFrame frame;
  frame.kind = static_cast<uint8_t>(kind);
  frame.sender = static_cast<uint16_t>(sender);
  frame.receiver = static_cast<uint16_t>(receiver);
  frame.round = static_cast<uint32_t>(round);
  frame.scalars = std::move(scalars);
  return frame;
}

Matrix reshape(std::vector<double> scalars, int64_t rows, int64_t cols, const char* op) {
  if (static_cast<int64_t>(scalars.size()) != rows * cols) {
    throw Error(kModule, op,
                "payload of " + std::to_string(scalars.size()) + " scalars does not reshape to " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Matrix(rows, cols, std::move(scalars));
}

// Runs `fn(client_id)` on one thread per client and joins them all; a failed
// client sends a poison frame so the coordinator stops waiting on it.
// Rethrows the first client failure after the join.
template <typename Fn>
void run_clients(Link& link, int64_t clients, Fn fn) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(clients));
  for (int64_t i = 1; i <= clients; ++i) {
    threads.emplace_back([&, i] {
      try {
        fn(static_cast<int>(i));
      } catch (...) {
        errors[static_cast<size_t>(i - 1)] = std::current_exception();
        try {
          link.endpoints[static_cast<size_t>(i - 1)]->send(WireFrame{});
        } catch (...) {
          // peer already gone
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Client bodies on worker threads, coordinator body on the calling thread.
// Either side failing poisons the other so both unwind.
template <typename ClientFn, typename CoordFn>
void run_protocol(Link& link, int64_t clients, ClientFn client_fn, CoordFn coordinator_fn) {
  std::exception_ptr client_error;
  std::thread worker([&] {
    try {
      run_clients(link, clients, client_fn);
    } catch (...) {
      client_error = std::current_exception();
    }
  });
  try {
    coordinator_fn();
  } catch (...) {
    link.hub->poison_all();
    worker.join();
    if (client_error) std::rethrow_exception(client_error);
    throw;
  }
  worker.join();
  if (client_error) std::rethrow_exception(client_error);
}

}  // namespace

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::LatentUpload: return "LatentUpload";
    case MessageKind::SynthesisRequest: return "SynthesisRequest";
    case MessageKind::LatentPartition: return "LatentPartition";
    case MessageKind::ForwardActivations: return "ForwardActivations";
    case MessageKind::BackwardGradients: return "BackwardGradients";
  }
  return "Unknown";
}

int64_t payload_scalar_count(const MessagePayload& payload) {
  if (std::holds_alternative<LatentPayload>(payload)) {
    return std::get<LatentPayload>(payload).values.size();
  }
  if (std::holds_alternative<RowCountPayload>(payload)) return 1;
  return 0;
}

int64_t message_bytes(int64_t scalar_count) {
  return scalar_count * kBytesPerScalar + kMessageHeaderBytes;
}

void Transcript::record(MessageKind kind, int sender, int receiver, int64_t round,
                        std::optional<int64_t> iteration, int64_t scalar_count) {
  MessageRecord rec;
  rec.kind = kind;
  rec.sender = sender;
  rec.receiver = receiver;
  rec.round = round;
  rec.iteration = iteration;
  rec.scalar_count = scalar_count;
  rec.bytes = message_bytes(scalar_count);
  records_.push_back(rec);
}

void Transcript::canonicalize() {
  std::stable_sort(records_.begin(), records_.end(),
                   [](const MessageRecord& a, const MessageRecord& b) {
                     const auto key = [](const MessageRecord& r) {
                       return std::tuple(r.round, r.sender, static_cast<int>(r.kind), r.receiver);
                     };
                     return key(a) < key(b);
                   });
}

int64_t Transcript::total_bytes() const {
  int64_t total = 0;
  for (const auto& r : records_) total += r.bytes;
  return total;
}

int64_t Transcript::total_payload_bytes() const {
  int64_t total = 0;
  for (const auto& r : records_) total += r.scalar_count * kBytesPerScalar;
  return total;
}

int64_t Transcript::round_count() const {
  int64_t max_round = 0;
  for (const auto& r : records_) max_round = std::max(max_round, r.round);
  return max_round;
}

int64_t Transcript::count_of(MessageKind kind) const {
  int64_t n = 0;
  for (const auto& r : records_) {
    if (r.kind == kind) ++n;
  }
  return n;
}

int64_t Transcript::bytes_of(MessageKind kind) const {
  int64_t n = 0;
  for (const auto& r : records_) {
    if (r.kind == kind) n += r.bytes;
  }
  return n;
}

void Transcript::to_csv(std::ostream& out) const {
  out << "round,kind,sender,receiver,bytes\n";
  for (const auto& r : records_) {
    out << r.round << ',' << to_string(r.kind) << ',' << r.sender << ',' << r.receiver << ','
        << r.bytes << '\n';
  }
}

void Transcript::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "transcript", "cannot open '" + path + "'");
  to_csv(out);
}

AutoencoderConfig FederationConfig::client_autoencoder_config(int64_t block_width) const {
  AutoencoderConfig cfg;
  cfg.latent_dim = ae_latent_override.value_or(block_width);
  cfg.hidden_dim = std::max<int64_t>(1, ae_hidden_total / clients);
  cfg.encoder_layers = ae_layers;
  cfg.decoder_layers = ae_layers;
  cfg.epochs = ae_epochs;
  cfg.batch_size = ae_batch;
  cfg.lr = ae_lr;
  return cfg;
}

VerticalPartition FederationConfig::resolve_partition(int64_t total_columns) const {
  if (partition.has_value()) {
    partition->validate(total_columns);
    if (partition->client_count != clients) {
      throw Error(kModule, "config", "explicit partition does not match client count");
    }
    return *partition;
  }
  if (permutation_seed.has_value()) {
    const auto perm = seeded_column_permutation(total_columns, *permutation_seed);
    return partition_equal(total_columns, clients, &perm);
  }
  return partition_equal(total_columns, clients);
}

std::vector<int64_t> StackedArtifacts::latent_widths() const {
  std::vector<int64_t> widths;
  for (const auto& c : clients) widths.push_back(c.autoencoder.latent_dim());
  return widths;
}

std::vector<int64_t> StackedArtifacts::latent_offsets() const {
  std::vector<int64_t> offsets{0};
  for (const auto& c : clients) offsets.push_back(offsets.back() + c.autoencoder.latent_dim());
  return offsets;
}

StackedArtifacts run_stacked_training(const FederationConfig& config, const Table& table) {
  table.validate();
  if (config.coordinator_id < 1 || config.coordinator_id > config.clients) {
    throw Error(kModule, "run_stacked_training", "coordinator must be one of the clients");
  }
  const int64_t n = table.row_count();
  const auto partition = config.resolve_partition(table.column_count());

  StackedArtifacts result;
  result.config = config;
  result.schema = table.schema;
  result.partition = partition;
  result.clients.resize(static_cast<size_t>(config.clients));

  // Latent widths are determined by config and partition alone, so the
  // coordinator can size incoming uploads without touching client state.
  std::vector<int64_t> latent_widths;
  for (int64_t i = 0; i < config.clients; ++i) {
    const auto block_width = static_cast<int64_t>(partition.assignment[static_cast<size_t>(i)].size());
    latent_widths.push_back(config.ae_latent_override.value_or(block_width));
  }

  Link link = make_link(config.transport, config.clients);
  const int coord = config.coordinator_id;

  // Phase 1: local autoencoder training, in parallel, no messages. Phase 2:
  // each client encodes its block in Eval mode and uploads the latents once.
  auto client_body = [&](int id) {
    const auto& columns = partition.assignment[static_cast<size_t>(id - 1)];
    ClientArtifacts& art = result.clients[static_cast<size_t>(id - 1)];
    art.client_id = id;
    art.columns = columns;
    const Table block = table.select_columns(columns);
    art.block_schema = block.schema;
    art.normalizer = fit_normalizer(block);
    const Table normalized = art.normalizer.apply(block);
    const auto ae_cfg = config.client_autoencoder_config(block.column_count());
    Rng init_rng(derive_seed(config.master_seed, "ae-init", static_cast<uint64_t>(id)));
    art.autoencoder = make_autoencoder(block.schema, ae_cfg, init_rng);
    Rng train_rng(derive_seed(config.master_seed, "ae-train", static_cast<uint64_t>(id)));
    try {
      art.curve = train_autoencoder(art.autoencoder, normalized, ae_cfg, train_rng);
    } catch (const Error& e) {
      throw Error(kModule, "run_stacked_training",
                  "client " + std::to_string(id) + " autoencoder failed: " + e.what());
    }
    const Matrix latents = encode(art.autoencoder, normalized);
    link.endpoints[static_cast<size_t>(id - 1)]->send(make_frame(
        MessageKind::LatentUpload, id, coord, 1, latents.storage()));
  };

  std::vector<Matrix> latent_blocks(static_cast<size_t>(config.clients));
  run_protocol(link, config.clients, client_body, [&] {
    for (int64_t i = 1; i <= config.clients; ++i) {
      WireFrame frame = link.hub->recv_from(static_cast<int>(i));
      result.transcript.record(static_cast<MessageKind>(frame.kind), frame.sender, frame.receiver,
                               frame.round, std::nullopt,
                               static_cast<int64_t>(frame.scalars.size()));
      latent_blocks[static_cast<size_t>(i - 1)] =
          reshape(std::move(frame.scalars), n, latent_widths[static_cast<size_t>(i - 1)],
                  "run_stacked_training");
    }
  });
  const Matrix latents = hconcat(latent_blocks);

  Rng diff_init(derive_seed(config.master_seed, "diffusion-init", 0));
  result.model = make_diffusion_model(latents.cols(), config.diffusion, diff_init);
  Rng diff_train(derive_seed(config.master_seed, "diffusion-train", 0));
  try {
    result.diffusion_curve = train_diffusion(result.model, latents, config.diffusion, diff_train);
  } catch (const Error& e) {
    throw Error(kModule, "run_stacked_training",
                std::string("coordinator diffusion training failed: ") + e.what());
  }
  result.transcript.canonicalize();
  return result;
}

Table SynthesisResult::merged(const StackedArtifacts& artifacts) const {
  return merge_partitioned(client_blocks, artifacts.partition, artifacts.schema);
}

SynthesisResult run_synthesis(const StackedArtifacts& artifacts, int64_t rows, int requester_id,
                              std::optional<int64_t> inference_steps,
                              std::optional<uint64_t> seed) {
  const auto& config = artifacts.config;
  if (requester_id < 1 || requester_id > config.clients) {
    throw Error(kModule, "run_synthesis", "unknown requesting client");
  }
  if (rows < 0) throw Error(kModule, "run_synthesis", "negative row count");
  const int64_t steps = inference_steps.value_or(config.diffusion.inference_steps);
  const uint64_t sample_seed =
      seed.value_or(derive_seed(config.master_seed, "synthesis", 0));
  const int coord = config.coordinator_id;
  const auto offsets = artifacts.latent_offsets();

  SynthesisResult result;
  result.client_blocks.resize(static_cast<size_t>(config.clients));

  Link link = make_link(config.transport, config.clients);

  auto client_body = [&](int id) {
    auto& endpoint = *link.endpoints[static_cast<size_t>(id - 1)];
    if (id == requester_id) {
      endpoint.send(make_frame(MessageKind::SynthesisRequest, id, coord, 1,
                               {static_cast<double>(rows)}));
    }
    WireFrame frame = endpoint.recv();
    if (static_cast<MessageKind>(frame.kind) != MessageKind::LatentPartition) {
      throw Error(kModule, "run_synthesis", "client expected a latent partition");
    }
    const auto& art = artifacts.clients[static_cast<size_t>(id - 1)];
    const Matrix slice =
        reshape(std::move(frame.scalars), rows, art.autoencoder.latent_dim(), "run_synthesis");
    Rng decode_rng(derive_seed(sample_seed, "decode", static_cast<uint64_t>(id)));
    Table block = decode(art.autoencoder, slice, config.decode_mode, &decode_rng);
    result.client_blocks[static_cast<size_t>(id - 1)] = art.normalizer.invert(block);
  };

  run_protocol(link, config.clients, client_body, [&] {
    // Coordinator: wait for the request, denoise, partition, send slices.
    WireFrame request = link.hub->recv_from(requester_id);
    result.transcript.record(static_cast<MessageKind>(request.kind), request.sender,
                             request.receiver, request.round, std::nullopt,
                             static_cast<int64_t>(request.scalars.size()));
    const auto requested = static_cast<int64_t>(request.scalars.at(0));
    if (requested != rows) throw Error(kModule, "run_synthesis", "request row count mismatch");

    Rng sample_rng(derive_seed(sample_seed, "latent-noise", 0));
    const Matrix synthetic = sample_latents(artifacts.model, rows, steps, sample_rng);
    for (int64_t i = 1; i <= config.clients; ++i) {
      const Matrix slice = column_slice(synthetic, offsets[static_cast<size_t>(i - 1)],
                                        offsets[static_cast<size_t>(i)]);
      result.transcript.record(MessageKind::LatentPartition, coord, static_cast<int>(i), 1,
                               std::nullopt, slice.size());
      link.hub->send_to(static_cast<int>(i),
                        make_frame(MessageKind::LatentPartition, coord, static_cast<int>(i), 1,
                                   slice.storage()));
    }
  });
  result.transcript.canonicalize();
  return result;
}

// --- end-to-end distributed baseline ------------------------------------------

E2EArtifacts run_e2e_distr_training(const FederationConfig& config, const Table& table,
                                    int64_t iterations) {
  table.validate();
  if (iterations < 0) throw Error(kModule, "run_e2e_distr_training", "negative iteration count");
  const int64_t n = table.row_count();
  const auto partition = config.resolve_partition(table.column_count());
  const int64_t batch = std::min<int64_t>(std::max<int64_t>(1, config.diffusion.batch_size), n);
  const int coord = config.coordinator_id;

  E2EArtifacts result;
  result.config = config;
  result.schema = table.schema;
  result.partition = partition;
  result.clients.resize(static_cast<size_t>(config.clients));

  // Client setup happens before the message loop so width bookkeeping is
  // available to the coordinator.
  std::vector<int64_t> latent_widths;
  for (int64_t i = 1; i <= config.clients; ++i) {
    auto& art = result.clients[static_cast<size_t>(i - 1)];
    art.client_id = static_cast<int>(i);
    art.columns = partition.assignment[static_cast<size_t>(i - 1)];
    const Table block = table.select_columns(art.columns);
    art.block_schema = block.schema;
    art.normalizer = fit_normalizer(block);
    const auto ae_cfg = config.client_autoencoder_config(block.column_count());
    Rng init_rng(derive_seed(config.master_seed, "e2e-ae-init", static_cast<uint64_t>(i)));
    art.autoencoder = make_autoencoder(block.schema, ae_cfg, init_rng);
    latent_widths.push_back(art.autoencoder.latent_dim());
  }
  std::vector<int64_t> offsets{0};
  for (int64_t w : latent_widths) offsets.push_back(offsets.back() + w);
  const int64_t total_latent = offsets.back();

  Rng diff_init(derive_seed(config.master_seed, "e2e-diffusion-init", 0));
  result.model = make_diffusion_model(total_latent, config.diffusion, diff_init);

  Link link = make_link(config.transport, config.clients);

  AdamConfig adam_cfg;
  adam_cfg.lr = config.diffusion.lr;

  auto client_body = [&](int id) {
    auto& art = result.clients[static_cast<size_t>(id - 1)];
    const Table block = table.select_columns(art.columns);
    const Table normalized = art.normalizer.apply(block);
    const Matrix inputs = one_hot_encode(normalized);
    auto& endpoint = *link.endpoints[static_cast<size_t>(id - 1)];

    AdamConfig client_adam;
    client_adam.lr = config.ae_lr;
    AdamState enc_state = AdamState::for_mlp(art.autoencoder.encoder, client_adam);
    AdamState dec_state = AdamState::for_mlp(art.autoencoder.decoder, client_adam);
    Rng local_rng(derive_seed(config.master_seed, "e2e-client", static_cast<uint64_t>(id)));

    std::vector<int64_t> rows(static_cast<size_t>(batch));
    for (int64_t iter = 1; iter <= iterations; ++iter) {
      // All participants derive the same row sample per iteration; sample
      // alignment without extra messages.
      Rng batch_rng(derive_seed(config.master_seed, "e2e-batch", static_cast<uint64_t>(iter)));
      for (auto& r : rows) r = batch_rng.uniform_int(0, n - 1);
      const Matrix x = gather_rows(inputs, rows);
      const Table targets = normalized.gather(rows);

      ForwardCache enc_cache;
      const Matrix z = forward(art.autoencoder.encoder, x, RunMode::Train, &local_rng, &enc_cache);
      endpoint.send(make_frame(MessageKind::ForwardActivations, id, coord, iter, z.storage()));

      WireFrame denoised = endpoint.recv();
      const Matrix z_tilde = reshape(std::move(denoised.scalars), batch,
                                     art.autoencoder.latent_dim(), "run_e2e_distr_training");
      ForwardCache dec_cache;
      const Matrix heads_out =
          forward(art.autoencoder.decoder, z_tilde, RunMode::Train, &local_rng, &dec_cache);
      Matrix head_grad;
      const double ae_loss =
          reconstruction_loss(art.autoencoder.heads, heads_out, targets, &head_grad);
      if (!std::isfinite(ae_loss)) {
        throw Error(kModule, "run_e2e_distr_training",
                    "client " + std::to_string(id) + " diverged at iteration " +
                        std::to_string(iter));
      }
      art.reconstruction_loss.push_back(ae_loss);

      Matrix z_tilde_grad;
      const Gradients dec_grads =
          backward(art.autoencoder.decoder, dec_cache, head_grad, &z_tilde_grad);
      dec_state.apply(art.autoencoder.decoder, dec_grads);
      endpoint.send(make_frame(MessageKind::BackwardGradients, id, coord, iter,
                               z_tilde_grad.storage()));

      WireFrame enc_grad_frame = endpoint.recv();
      const Matrix z_grad = reshape(std::move(enc_grad_frame.scalars), batch,
                                    art.autoencoder.latent_dim(), "run_e2e_distr_training");
      const Gradients enc_grads = backward(art.autoencoder.encoder, enc_cache, z_grad);
      enc_state.apply(art.autoencoder.encoder, enc_grads);
    }
  };

  AdamState backbone_state = AdamState::for_mlp(result.model.backbone, adam_cfg);
  Rng coord_rng(derive_seed(config.master_seed, "e2e-coordinator", 0));
  std::vector<int64_t> ts(static_cast<size_t>(batch));

  run_protocol(link, config.clients, client_body, [&] {
    for (int64_t iter = 1; iter <= iterations; ++iter) {
      std::vector<Matrix> blocks(static_cast<size_t>(config.clients));
      for (int64_t i = 1; i <= config.clients; ++i) {
        WireFrame frame = link.hub->recv_from(static_cast<int>(i));
        result.transcript.record(static_cast<MessageKind>(frame.kind), frame.sender,
                                 frame.receiver, frame.round, iter,
                                 static_cast<int64_t>(frame.scalars.size()));
        blocks[static_cast<size_t>(i - 1)] =
            reshape(std::move(frame.scalars), batch, latent_widths[static_cast<size_t>(i - 1)],
                    "run_e2e_distr_training");
      }
      const Matrix z = hconcat(blocks);

      for (auto& t : ts) t = coord_rng.uniform_int(1, result.model.schedule.steps);
      const Matrix eps = coord_rng.normal_matrix(batch, total_latent);
      const Matrix z_t = forward_noise_rows(result.model.schedule, z, ts, eps);
      ForwardCache cache;
      const Matrix eps_hat =
          predict_eps(result.model, z_t, ts, RunMode::Train, &coord_rng, &cache);
      Matrix eps_grad;
      const double diffusion_loss = mean_squared_error(eps_hat, eps, &eps_grad);
      if (!std::isfinite(diffusion_loss)) {
        throw Error(kModule, "run_e2e_distr_training",
                    "coordinator diverged at iteration " + std::to_string(iter));
      }
      result.diffusion_loss.push_back(diffusion_loss);

      const Matrix z_tilde = x0_from_eps(result.model.schedule, z_t, ts, eps_hat);
      for (int64_t i = 1; i <= config.clients; ++i) {
        const Matrix slice = column_slice(z_tilde, offsets[static_cast<size_t>(i - 1)],
                                          offsets[static_cast<size_t>(i)]);
        result.transcript.record(MessageKind::ForwardActivations, coord, static_cast<int>(i),
                                 iter, iter, slice.size());
        link.hub->send_to(static_cast<int>(i),
                          make_frame(MessageKind::ForwardActivations, coord, static_cast<int>(i),
                                     iter, slice.storage()));
      }

      std::vector<Matrix> grad_blocks(static_cast<size_t>(config.clients));
      for (int64_t i = 1; i <= config.clients; ++i) {
        WireFrame frame = link.hub->recv_from(static_cast<int>(i));
        result.transcript.record(static_cast<MessageKind>(frame.kind), frame.sender,
                                 frame.receiver, frame.round, iter,
                                 static_cast<int64_t>(frame.scalars.size()));
        grad_blocks[static_cast<size_t>(i - 1)] =
            reshape(std::move(frame.scalars), batch, latent_widths[static_cast<size_t>(i - 1)],
                    "run_e2e_distr_training");
      }
      const Matrix z_tilde_grad = hconcat(grad_blocks);

      // Backprop through z_tilde = (z_t - b*eps_hat)/a with a = sqrt(abar_t),
      // b = sqrt(1-abar_t) per row: the decoder loss reaches eps_hat and z_t,
      // the epsilon MSE reaches eps_hat directly, and z = (z_t - b*eps)/...
      // contributes through z_t = a*z + b*eps.
      Matrix backbone_out_grad = eps_grad;
      Matrix z_t_direct(batch, total_latent);
      for (int64_t r = 0; r < batch; ++r) {
        const double abar = result.model.schedule.alpha_bar_at(ts[static_cast<size_t>(r)]);
        const double a = std::sqrt(abar);
        const double b = std::sqrt(1.0 - abar);
        auto g_row = z_tilde_grad.row(r);
        auto out_row = backbone_out_grad.row(r);
        auto direct_row = z_t_direct.row(r);
        for (int64_t c = 0; c < total_latent; ++c) {
          out_row[c] += -(b / a) * g_row[c];
          direct_row[c] = g_row[c] / a;
        }
      }
      Matrix backbone_input_grad;
      const Gradients backbone_grads =
          backward(result.model.backbone, cache, backbone_out_grad, &backbone_input_grad);
      backbone_state.apply(result.model.backbone, backbone_grads);

      Matrix z_grad(batch, total_latent);
      for (int64_t r = 0; r < batch; ++r) {
        const double abar = result.model.schedule.alpha_bar_at(ts[static_cast<size_t>(r)]);
        const double a = std::sqrt(abar);
        auto z_t_row = backbone_input_grad.row(r);  // first s columns
        auto direct_row = z_t_direct.row(r);
        auto out_row = z_grad.row(r);
        for (int64_t c = 0; c < total_latent; ++c) {
          out_row[c] = a * (z_t_row[c] + direct_row[c]);
        }
      }
      for (int64_t i = 1; i <= config.clients; ++i) {
        const Matrix slice = column_slice(z_grad, offsets[static_cast<size_t>(i - 1)],
                                          offsets[static_cast<size_t>(i)]);
        result.transcript.record(MessageKind::BackwardGradients, coord, static_cast<int>(i), iter,
                                 iter, slice.size());
        link.hub->send_to(static_cast<int>(i),
                          make_frame(MessageKind::BackwardGradients, coord, static_cast<int>(i),
                                     iter, slice.storage()));
      }
    }
  });

  result.joint_loss = result.diffusion_loss;
  for (const auto& client : result.clients) {
    for (size_t i = 0; i < client.reconstruction_loss.size(); ++i) {
      result.joint_loss[i] += client.reconstruction_loss[i];
    }
  }
  result.transcript.canonicalize();
  return result;
}

// --- closed-form byte models ---------------------------------------------------

int64_t stacked_upload_bytes(int64_t rows, std::span<const int64_t> latent_widths) {
  int64_t total = 0;
  for (int64_t s : latent_widths) total += message_bytes(rows * s);
  return total;
}

int64_t e2e_bytes_per_iteration(std::span<const int64_t> widths, int64_t batch) {
  int64_t total = 0;
  for (int64_t w : widths) total += 4 * message_bytes(batch * w);
  return total;
}

int64_t e2e_payload_bytes_per_iteration(std::span<const int64_t> widths, int64_t batch) {
  int64_t total = 0;
  for (int64_t w : widths) total += 4 * batch * w * kBytesPerScalar;
  return total;
}

int64_t e2e_training_bytes(std::span<const int64_t> widths, int64_t batch, int64_t iterations) {
  return iterations * e2e_bytes_per_iteration(widths, batch);
}

OneHotCostReport hypothetical_onehot_cost(const Schema& schema, const VerticalPartition& partition,
                                          int64_t iterations, int64_t batch,
                                          std::span<const int64_t> latent_widths) {
  partition.validate(schema.width());
  OneHotCostReport report;
  report.iterations = iterations;
  report.batch = batch;
  report.latent_widths.assign(latent_widths.begin(), latent_widths.end());
  for (const auto& block : partition.assignment) {
    Schema block_schema;
    for (int64_t col : block) block_schema.columns.push_back(schema.at(col));
    report.one_hot_widths.push_back(one_hot_width(block_schema));
  }
  report.e2e_total_bytes = e2e_training_bytes(latent_widths, batch, iterations);
  report.one_hot_total_bytes = e2e_training_bytes(report.one_hot_widths, batch, iterations);
  report.e2e_payload_per_iteration = e2e_payload_bytes_per_iteration(latent_widths, batch);
  report.one_hot_payload_per_iteration =
      e2e_payload_bytes_per_iteration(report.one_hot_widths, batch);
  report.expansion_ratio =
      report.e2e_payload_per_iteration > 0
          ? static_cast<double>(report.one_hot_payload_per_iteration) /
                static_cast<double>(report.e2e_payload_per_iteration)
          : 1.0;
  return report;
}

}  // namespace silofuse
