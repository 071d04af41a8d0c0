#pragma once

#include <cstdint>
#include <vector>

#include "silofuse/nn.hpp"
#include "silofuse/table.hpp"

namespace silofuse {

struct AutoencoderConfig {
  int64_t latent_dim = 0;  // s_i; 0 means "number of original columns"
  int64_t hidden_dim = 256;
  int64_t encoder_layers = 3;
  int64_t decoder_layers = 3;
  int64_t epochs = 200;  // e1
  int64_t batch_size = 512;
  double lr = 1e-3;
  double holdout_fraction = 0.1;
  // The Gaussian heads sharpen the loss landscape as their variances shrink;
  // clipping plus cosine decay keeps late training from oscillating.
  double gradient_clip = 5.0;      // global L2 norm; 0 disables
  double lr_floor_fraction = 0.1;  // cosine decay from lr down to lr * fraction
};

/// Width map of the decoder output: a (mean, log-variance) pair per
/// continuous column and a logit block per categorical column.
struct DecoderHeads {
  struct Entry {
    bool categorical = false;
    int64_t offset = 0;
    int64_t width = 0;  // 2 for continuous, cardinality for categorical
  };
  std::vector<Entry> entries;
  int64_t total_width = 0;

  static DecoderHeads for_schema(const Schema& schema);
};

// Log-variance heads are clamped to this range before exponentiation.
constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 10.0;

/// One client's encoder/decoder pair over its feature block. Continuous
/// inputs are expected standardized; categoricals enter one-hot and decode
/// back to class indices.
struct Autoencoder {
  Schema block_schema;
  DecoderHeads heads;
  Mlp encoder;
  Mlp decoder;

  int64_t latent_dim() const { return encoder.output_dim(); }
};

Autoencoder make_autoencoder(const Schema& block_schema, const AutoencoderConfig& config,
                             Rng& init_rng);

// One-hot expansion of a (normalized) feature block: continuous cells pass
// through, categorical cells expand to indicator groups.
Matrix one_hot_encode(const Table& block);

// Z_i = E_i(X_i), Eval mode.
Matrix encode(const Autoencoder& ae, const Table& normalized_block);

// Mean over rows of summed per-column negative log-likelihood: Gaussian NLL
// for continuous heads, softmax cross-entropy for categorical heads.
// Optionally yields d(loss)/d(head outputs).
double reconstruction_loss(const DecoderHeads& heads, const Matrix& head_output,
                           const Table& target_block, Matrix* head_grad = nullptr);

enum class DecodeMode { Mode, Sample };

// Latents back to a feature block (still in normalized space). Mode picks
// means / argmax (ties -> lowest class index); Sample draws from the heads'
// distributions with the supplied RNG.
Table decode(const Autoencoder& ae, const Matrix& latents, DecodeMode mode, Rng* rng = nullptr);

struct TrainingCurve {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> holdout_loss;
};

// Algorithm: shuffled minibatch Adam over the reconstruction loss, with a
// held-out slice scored per epoch. Throws on divergence, naming the epoch.
TrainingCurve train_autoencoder(Autoencoder& ae, const Table& normalized_block,
                                const AutoencoderConfig& config, Rng& rng);

}  // namespace silofuse
