#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "silofuse/nn.hpp"

namespace silofuse {

/// Linear-ramp variance schedule. beta/alpha/alpha_bar are indexed by
/// timestep t in [1, T] via the accessors; alpha_bar(0) is defined as 1.
struct NoiseSchedule {
  int64_t steps = 0;  // T
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double beta_at(int64_t t) const { return beta[static_cast<size_t>(t - 1)]; }
  double alpha_at(int64_t t) const { return alpha[static_cast<size_t>(t - 1)]; }
  double alpha_bar_at(int64_t t) const {
    return t == 0 ? 1.0 : alpha_bar[static_cast<size_t>(t - 1)];
  }
};

NoiseSchedule make_schedule(int64_t steps, double beta_min = 1e-4, double beta_max = 0.02);

struct DiffusionConfig {
  int64_t timesteps = 200;  // T
  int64_t inference_steps = 25;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  int64_t backbone_depth = 8;  // linear layers
  int64_t backbone_hidden = 128;
  int64_t time_embedding_dim = 32;
  double dropout = 0.01;
  int64_t train_iters = 20000;  // e2, counted in minibatches
  int64_t batch_size = 512;
  double lr = 1e-3;
};

/// Sinusoidal embedding of the integer timestep; distinct t in [1, T] map to
/// distinct vectors.
struct TimestepEmbedding {
  int64_t dim = 32;

  std::vector<double> at(int64_t t) const;
  // One embedding row per entry of `t`.
  Matrix rows(std::span<const int64_t> t) const;
};

/// Backbone plus schedule plus the latent standardization fitted on the
/// training latents (applied before noising, inverted after sampling).
struct DiffusionModel {
  NoiseSchedule schedule;
  TimestepEmbedding time_embedding;
  int64_t latent_dim = 0;  // s
  Mlp backbone;            // input s + time_embedding.dim -> ... -> s
  std::vector<double> latent_means;
  std::vector<double> latent_stds;

  Matrix standardize(const Matrix& latents) const;
  Matrix destandardize(const Matrix& latents) const;
};

DiffusionModel make_diffusion_model(int64_t latent_dim, const DiffusionConfig& config,
                                    Rng& init_rng);

// Closed-form forward process: sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps.
Matrix forward_noise(const NoiseSchedule& schedule, const Matrix& z0, int64_t t,
                     const Matrix& eps);
// Row-wise variant with one timestep per row.
Matrix forward_noise_rows(const NoiseSchedule& schedule, const Matrix& z0,
                          std::span<const int64_t> t, const Matrix& eps);

// Clean-sample estimate from a noise prediction, the inverse of the forward
// closed form: (z_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t).
Matrix x0_from_eps(const NoiseSchedule& schedule, const Matrix& z_t, std::span<const int64_t> t,
                   const Matrix& eps_hat);

// Backbone noise prediction on standardized latents; per-row timesteps.
Matrix predict_eps(const DiffusionModel& model, const Matrix& z_t, std::span<const int64_t> t,
                   RunMode mode, Rng* rng = nullptr, ForwardCache* cache = nullptr,
                   Matrix* backbone_input = nullptr);

struct DiffusionCurve {
  std::vector<double> iteration_loss;
};

// Epsilon-prediction MSE training over the (internally standardized) latent
// matrix. Throws on divergence, naming the iteration.
DiffusionCurve train_diffusion(DiffusionModel& model, const Matrix& latents,
                               const DiffusionConfig& config, Rng& rng);

// Evenly spaced decreasing timestep subsequence from T down to 1;
// inference_steps == T yields stride 1.
std::vector<int64_t> strided_timesteps(int64_t timesteps, int64_t inference_steps);

using Denoiser = std::function<Matrix(const Matrix& z_t, int64_t t)>;

// Strided ancestral sampling with posterior variance beta-tilde. Operates in
// the denoiser's own space; callers handle any standardization.
Matrix sample(const Denoiser& denoiser, const NoiseSchedule& schedule, int64_t rows, int64_t cols,
              int64_t inference_steps, Rng& rng);

// Full pipeline: sample standardized latents from the model's backbone and
// map back to the original latent space.
Matrix sample_latents(const DiffusionModel& model, int64_t rows, int64_t inference_steps,
                      Rng& rng);

}  // namespace silofuse
