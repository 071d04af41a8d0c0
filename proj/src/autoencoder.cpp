#include "silofuse/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "silofuse/error.hpp"

namespace silofuse {
namespace {

double gradient_sq_norm(const Gradients& grads) {
  double acc = 0.0;
  for (const auto& w : grads.weights) {
    for (double v : w.storage()) acc += v * v;
  }
  for (const auto& b : grads.biases) {
    for (double v : b) acc += v * v;
  }
  return acc;
}

// Joint clip across both nets so their scales stay coupled.
void clip_gradients(Gradients& a, Gradients& b, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(gradient_sq_norm(a) + gradient_sq_norm(b));
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    a.scale(scale);
    b.scale(scale);
  }
}

}  // namespace
}  // namespace silofuse

namespace silofuse {

namespace {
constexpr const char* kModule = "autoencoder";
constexpr double kHalfLog2Pi = 0.9189385332046727418;  // 0.5 * ln(2*pi)
}  // namespace

DecoderHeads DecoderHeads::for_schema(const Schema& schema) {
  DecoderHeads heads;
  int64_t offset = 0;
  for (const auto& col : schema.columns) {
    Entry e;
    e.categorical = col.is_categorical();
    e.offset = offset;
    e.width = e.categorical ? col.cardinality() : 2;
    offset += e.width;
    heads.entries.push_back(e);
  }
  heads.total_width = offset;
  return heads;
}

Autoencoder make_autoencoder(const Schema& block_schema, const AutoencoderConfig& config,
                             Rng& init_rng) {
  block_schema.validate();
  Autoencoder ae;
  ae.block_schema = block_schema;
  ae.heads = DecoderHeads::for_schema(block_schema);
  const int64_t latent = config.latent_dim > 0 ? config.latent_dim : block_schema.width();
  const int64_t input = one_hot_width(block_schema);

  std::vector<int64_t> enc_dims;
  enc_dims.push_back(input);
  for (int64_t i = 0; i < config.encoder_layers - 1; ++i) enc_dims.push_back(config.hidden_dim);
  enc_dims.push_back(latent);
  ae.encoder = make_mlp(enc_dims, Activation::Gelu, 0.0, init_rng);

  std::vector<int64_t> dec_dims;
  dec_dims.push_back(latent);
  for (int64_t i = 0; i < config.decoder_layers - 1; ++i) dec_dims.push_back(config.hidden_dim);
  dec_dims.push_back(ae.heads.total_width);
  ae.decoder = make_mlp(dec_dims, Activation::Gelu, 0.0, init_rng);
  return ae;
}

Matrix one_hot_encode(const Table& block) {
  const int64_t width = one_hot_width(block.schema);
  Matrix out(block.row_count(), width);
  for (int64_t r = 0; r < block.row_count(); ++r) {
    int64_t offset = 0;
    auto dst = out.row(r);
    for (int64_t c = 0; c < block.column_count(); ++c) {
      const auto& col = block.schema.at(c);
      const double v = block.cells.at(r, c);
      if (col.is_categorical()) {
        dst[offset + static_cast<int64_t>(v)] = 1.0;
        offset += col.cardinality();
      } else {
        dst[offset] = v;
        offset += 1;
      }
    }
  }
  return out;
}

Matrix encode(const Autoencoder& ae, const Table& normalized_block) {
  if (normalized_block.schema != ae.block_schema) {
    throw Error(kModule, "encode", "block schema does not match autoencoder");
  }
  if (normalized_block.row_count() == 0) return Matrix(0, ae.latent_dim());
  return forward(ae.encoder, one_hot_encode(normalized_block), RunMode::Eval);
}

double reconstruction_loss(const DecoderHeads& heads, const Matrix& head_output,
                           const Table& target_block, Matrix* head_grad) {
  if (head_output.cols() != heads.total_width) {
    throw Error(kModule, "reconstruction_loss", "head output width mismatch");
  }
  if (head_output.rows() != target_block.row_count() ||
      static_cast<size_t>(target_block.column_count()) != heads.entries.size()) {
    throw Error(kModule, "reconstruction_loss", "target shape mismatch");
  }
  const int64_t n = head_output.rows();
  if (n == 0) return 0.0;
  if (head_grad != nullptr) *head_grad = Matrix(head_output.rows(), head_output.cols());

  double total = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    auto out_row = head_output.row(r);
    for (size_t e = 0; e < heads.entries.size(); ++e) {
      const auto& entry = heads.entries[e];
      const double target = target_block.cells.at(r, static_cast<int64_t>(e));
      if (entry.categorical) {
        // Softmax cross-entropy over the logit block.
        const int64_t k = entry.width;
        double max_logit = out_row[entry.offset];
        for (int64_t j = 1; j < k; ++j) {
          max_logit = std::max(max_logit, out_row[entry.offset + j]);
        }
        double sum = 0.0;
        for (int64_t j = 0; j < k; ++j) sum += std::exp(out_row[entry.offset + j] - max_logit);
        const auto label = static_cast<int64_t>(target);
        const double log_prob = out_row[entry.offset + label] - max_logit - std::log(sum);
        total -= log_prob;
        if (head_grad != nullptr) {
          for (int64_t j = 0; j < k; ++j) {
            const double p = std::exp(out_row[entry.offset + j] - max_logit) / sum;
            head_grad->at(r, entry.offset + j) = (p - (j == label ? 1.0 : 0.0));
          }
        }
      } else {
        const double mu = out_row[entry.offset];
        const double raw_logvar = out_row[entry.offset + 1];
        const double logvar = std::clamp(raw_logvar, kLogVarMin, kLogVarMax);
        const double inv_var = std::exp(-logvar);
        const double diff = target - mu;
        total += kHalfLog2Pi + 0.5 * logvar + 0.5 * diff * diff * inv_var;
        if (head_grad != nullptr) {
          head_grad->at(r, entry.offset) = -diff * inv_var;
          const bool clamped = raw_logvar <= kLogVarMin || raw_logvar >= kLogVarMax;
          head_grad->at(r, entry.offset + 1) =
              clamped ? 0.0 : 0.5 - 0.5 * diff * diff * inv_var;
        }
      }
    }
  }
  if (head_grad != nullptr) scale_in_place(*head_grad, 1.0 / static_cast<double>(n));
  return total / static_cast<double>(n);
}

Table decode(const Autoencoder& ae, const Matrix& latents, DecodeMode mode, Rng* rng) {
  if (latents.cols() != ae.latent_dim()) {
    throw Error(kModule, "decode",
                "latent width " + std::to_string(latents.cols()) + " does not match s_i " +
                    std::to_string(ae.latent_dim()));
  }
  if (mode == DecodeMode::Sample && rng == nullptr) {
    throw Error(kModule, "decode", "Sample mode requires an RNG");
  }
  const Matrix heads_out =
      latents.rows() == 0 ? Matrix(0, ae.heads.total_width)
                          : forward(ae.decoder, latents, RunMode::Eval);
  Table out;
  out.schema = ae.block_schema;
  out.cells = Matrix(latents.rows(), ae.block_schema.width());
  for (int64_t r = 0; r < latents.rows(); ++r) {
    auto head_row = heads_out.row(r);
    for (size_t e = 0; e < ae.heads.entries.size(); ++e) {
      const auto& entry = ae.heads.entries[e];
      double value = 0.0;
      if (entry.categorical) {
        if (mode == DecodeMode::Mode) {
          // Argmax, ties broken by the lowest class index.
          int64_t best = 0;
          for (int64_t j = 1; j < entry.width; ++j) {
            if (head_row[entry.offset + j] > head_row[entry.offset + best]) best = j;
          }
          value = static_cast<double>(best);
        } else {
          double max_logit = head_row[entry.offset];
          for (int64_t j = 1; j < entry.width; ++j) {
            max_logit = std::max(max_logit, head_row[entry.offset + j]);
          }
          double sum = 0.0;
          for (int64_t j = 0; j < entry.width; ++j) {
            sum += std::exp(head_row[entry.offset + j] - max_logit);
          }
          const double u = rng->uniform01() * sum;
          double acc = 0.0;
          int64_t pick = entry.width - 1;
          for (int64_t j = 0; j < entry.width; ++j) {
            acc += std::exp(head_row[entry.offset + j] - max_logit);
            if (u < acc) {
              pick = j;
              break;
            }
          }
          value = static_cast<double>(pick);
        }
      } else {
        const double mu = head_row[entry.offset];
        if (mode == DecodeMode::Mode) {
          value = mu;
        } else {
          const double logvar = std::clamp(head_row[entry.offset + 1], kLogVarMin, kLogVarMax);
          value = rng->normal(mu, std::exp(0.5 * logvar));
        }
      }
      out.cells.at(r, static_cast<int64_t>(e)) = value;
    }
  }
  return out;
}

TrainingCurve train_autoencoder(Autoencoder& ae, const Table& normalized_block,
                                const AutoencoderConfig& config, Rng& rng) {
  const int64_t n = normalized_block.row_count();
  if (n < 2) throw Error(kModule, "train_autoencoder", "need at least 2 rows");

  auto order = rng.permutation(n);
  const int64_t holdout_n =
      std::max<int64_t>(1, static_cast<int64_t>(static_cast<double>(n) * config.holdout_fraction));
  std::vector<int64_t> holdout_idx(order.begin(), order.begin() + holdout_n);
  std::vector<int64_t> train_idx(order.begin() + holdout_n, order.end());

  const Table holdout = normalized_block.gather(holdout_idx);
  const Table train = normalized_block.gather(train_idx);
  const Matrix train_inputs = one_hot_encode(train);
  const Matrix holdout_inputs = one_hot_encode(holdout);

  const int64_t batch = std::min<int64_t>(std::max<int64_t>(1, config.batch_size),
                                          train.row_count());
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  AdamState enc_state = AdamState::for_mlp(ae.encoder, adam_cfg);
  AdamState dec_state = AdamState::for_mlp(ae.decoder, adam_cfg);

  auto holdout_loss = [&]() {
    const Matrix latents = forward(ae.encoder, holdout_inputs, RunMode::Eval);
    const Matrix heads_out = forward(ae.decoder, latents, RunMode::Eval);
    return reconstruction_loss(ae.heads, heads_out, holdout);
  };

  TrainingCurve curve;
  for (int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Cosine decay from lr down to lr * lr_floor_fraction.
    const double progress =
        config.epochs > 1 ? static_cast<double>(epoch) / static_cast<double>(config.epochs - 1)
                          : 0.0;
    const double floor = config.lr * config.lr_floor_fraction;
    const double lr_epoch =
        floor + 0.5 * (config.lr - floor) * (1.0 + std::cos(std::numbers::pi * progress));
    enc_state.config.lr = lr_epoch;
    dec_state.config.lr = lr_epoch;

    auto epoch_order = rng.permutation(train.row_count());
    double epoch_loss = 0.0;
    int64_t batches = 0;
    for (int64_t start = 0; start + batch <= train.row_count(); start += batch) {
      std::vector<int64_t> rows(epoch_order.begin() + start, epoch_order.begin() + start + batch);
      const Matrix x = gather_rows(train_inputs, rows);
      const Table targets = train.gather(rows);

      ForwardCache enc_cache, dec_cache;
      const Matrix latents = forward(ae.encoder, x, RunMode::Train, &rng, &enc_cache);
      const Matrix heads_out = forward(ae.decoder, latents, RunMode::Train, &rng, &dec_cache);
      Matrix head_grad;
      const double loss = reconstruction_loss(ae.heads, heads_out, targets, &head_grad);
      if (!std::isfinite(loss)) {
        throw Error(kModule, "train_autoencoder",
                    "loss diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
      ++batches;

      Matrix latent_grad;
      Gradients dec_grads = backward(ae.decoder, dec_cache, head_grad, &latent_grad);
      Gradients enc_grads = backward(ae.encoder, enc_cache, latent_grad);
      clip_gradients(dec_grads, enc_grads, config.gradient_clip);
      dec_state.apply(ae.decoder, dec_grads);
      enc_state.apply(ae.encoder, enc_grads);
    }
    curve.train_loss.push_back(batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0);
    const double val = holdout_loss();
    if (!std::isfinite(val)) {
      throw Error(kModule, "train_autoencoder",
                  "holdout loss diverged at epoch " + std::to_string(epoch));
    }
    curve.holdout_loss.push_back(val);
  }
  return curve;
}

}  // namespace silofuse
