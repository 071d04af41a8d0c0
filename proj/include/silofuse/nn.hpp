#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "silofuse/matrix.hpp"
#include "silofuse/rng.hpp"

namespace silofuse {

enum class Activation : uint8_t { Identity = 0, Gelu = 1 };
enum class RunMode { Train, Eval };

// Exact erf-based GELU, x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);

struct Layer {
  Matrix weight;             // input_dim x output_dim
  std::vector<double> bias;  // output_dim
  Activation activation = Activation::Identity;
  double dropout = 0.0;  // inverted dropout rate in [0, 1)

  int64_t input_dim() const { return weight.rows(); }
  int64_t output_dim() const { return weight.cols(); }
};

/// Plain feed-forward stack; the parameter set shared by encoders, decoders,
/// the diffusion backbone and the benchmark classifiers.
struct Mlp {
  std::vector<Layer> layers;

  int64_t input_dim() const { return layers.front().input_dim(); }
  int64_t output_dim() const { return layers.back().output_dim(); }
  int64_t parameter_count() const;
  void validate() const;
};

// He-uniform weights (fan-in scaled), zero bias. `dims` lists layer widths
// input-first; hidden layers get `hidden_activation`, the last layer
// Identity. Dropout applies to hidden layers only.
Mlp make_mlp(std::span<const int64_t> dims, Activation hidden_activation, double dropout,
             Rng& rng);

struct ForwardCache {
  const Mlp* params = nullptr;
  RunMode mode = RunMode::Eval;
  std::vector<Matrix> inputs;         // input to each layer
  std::vector<Matrix> preactivations; // xW + b per layer
  std::vector<Matrix> dropout_masks;  // scaled keep masks; empty when unused
};

// Train mode draws dropout masks from `rng` (inverted dropout) and fills the
// cache for backward; Eval mode is deterministic and never touches `rng`.
Matrix forward(const Mlp& params, const Matrix& batch, RunMode mode, Rng* rng = nullptr,
               ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  void accumulate(const Gradients& other);
  void scale(double s);
};

Gradients zero_gradients(const Mlp& params);

// Reverse-mode gradients of the forward map. `output_grad` is dLoss/dOutput;
// returns parameter gradients and (optionally) dLoss/dInput.
Gradients backward(const Mlp& params, const ForwardCache& cache, const Matrix& output_grad,
                   Matrix* input_grad = nullptr);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;

  static AdamState for_mlp(const Mlp& params, AdamConfig config);
  void apply(Mlp& params, const Gradients& grads);
};

// Numerically stable row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

// Mean cross-entropy of integer labels under row-wise softmax; optionally
// yields d(mean CE)/d(logits).
double softmax_cross_entropy(const Matrix& logits, std::span<const int64_t> labels,
                             Matrix* logits_grad = nullptr);

// Mean squared error over all cells; optionally yields d(mse)/d(prediction).
double mean_squared_error(const Matrix& prediction, const Matrix& target,
                          Matrix* prediction_grad = nullptr);

// --- checkpoints -------------------------------------------------------------
// Versioned little-endian binary dump of shapes and values; round-trips
// bit-exactly.

void save_mlp(const Mlp& params, std::ostream& out);
Mlp load_mlp(std::istream& in);
void save_mlp_file(const Mlp& params, const std::string& path);
Mlp load_mlp_file(const std::string& path);

}  // namespace silofuse
