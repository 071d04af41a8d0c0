#include "silofuse/diffusion.hpp"

#include <cmath>

#include "silofuse/error.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "diffusion";
}

NoiseSchedule make_schedule(int64_t steps, double beta_min, double beta_max) {
  if (steps < 1) throw Error(kModule, "make_schedule", "need at least one step");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
    throw Error(kModule, "make_schedule", "require 0 < beta_min <= beta_max < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta.resize(static_cast<size_t>(steps));
  s.alpha.resize(static_cast<size_t>(steps));
  s.alpha_bar.resize(static_cast<size_t>(steps));
  double running = 1.0;
  for (int64_t t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(steps - 1);
    const double b = beta_min + (beta_max - beta_min) * frac;
    s.beta[static_cast<size_t>(t)] = b;
    s.alpha[static_cast<size_t>(t)] = 1.0 - b;
    running *= 1.0 - b;
    s.alpha_bar[static_cast<size_t>(t)] = running;
  }
  return s;
}

std::vector<double> TimestepEmbedding::at(int64_t t) const {
  std::vector<double> emb(static_cast<size_t>(dim));
  const int64_t half = dim / 2;
  for (int64_t i = 0; i < half; ++i) {
    const double freq =
        std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    emb[static_cast<size_t>(2 * i)] = std::sin(static_cast<double>(t) * freq);
    emb[static_cast<size_t>(2 * i + 1)] = std::cos(static_cast<double>(t) * freq);
  }
  if (dim % 2 == 1) emb[static_cast<size_t>(dim - 1)] = static_cast<double>(t);
  return emb;
}

Matrix TimestepEmbedding::rows(std::span<const int64_t> t) const {
  Matrix out(static_cast<int64_t>(t.size()), dim);
  for (size_t r = 0; r < t.size(); ++r) {
    const auto emb = at(t[r]);
    auto row = out.row(static_cast<int64_t>(r));
    for (int64_t c = 0; c < dim; ++c) row[c] = emb[static_cast<size_t>(c)];
  }
  return out;
}

Matrix DiffusionModel::standardize(const Matrix& latents) const {
  Matrix out = latents;
  for (int64_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (int64_t c = 0; c < out.cols(); ++c) {
      row[c] = (row[c] - latent_means[static_cast<size_t>(c)]) /
               latent_stds[static_cast<size_t>(c)];
    }
  }
  return out;
}

Matrix DiffusionModel::destandardize(const Matrix& latents) const {
  Matrix out = latents;
  for (int64_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (int64_t c = 0; c < out.cols(); ++c) {
      row[c] = row[c] * latent_stds[static_cast<size_t>(c)] +
               latent_means[static_cast<size_t>(c)];
    }
  }
  return out;
}

DiffusionModel make_diffusion_model(int64_t latent_dim, const DiffusionConfig& config,
                                    Rng& init_rng) {
  if (config.inference_steps > config.timesteps) {
    throw Error(kModule, "config", "inference steps cannot exceed timesteps");
  }
  DiffusionModel model;
  model.schedule = make_schedule(config.timesteps, config.beta_min, config.beta_max);
  model.time_embedding.dim = config.time_embedding_dim;
  model.latent_dim = latent_dim;
  model.latent_means.assign(static_cast<size_t>(latent_dim), 0.0);
  model.latent_stds.assign(static_cast<size_t>(latent_dim), 1.0);

  std::vector<int64_t> dims;
  dims.push_back(latent_dim + config.time_embedding_dim);
  for (int64_t i = 0; i < config.backbone_depth - 1; ++i) dims.push_back(config.backbone_hidden);
  dims.push_back(latent_dim);
  model.backbone = make_mlp(dims, Activation::Gelu, config.dropout, init_rng);
  return model;
}

namespace {
void check_timestep(const NoiseSchedule& schedule, int64_t t, const char* op) {
  if (t < 1 || t > schedule.steps) {
    throw Error(kModule, op, "timestep " + std::to_string(t) + " out of [1, " +
                                 std::to_string(schedule.steps) + "]");
  }
}
}  // namespace

Matrix forward_noise(const NoiseSchedule& schedule, const Matrix& z0, int64_t t,
                     const Matrix& eps) {
  check_timestep(schedule, t, "forward_noise");
  if (z0.rows() != eps.rows() || z0.cols() != eps.cols()) {
    throw Error(kModule, "forward_noise", "z0/eps shape mismatch");
  }
  const double abar = schedule.alpha_bar_at(t);
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  Matrix out = z0;
  for (int64_t i = 0; i < out.size(); ++i) {
    out.storage()[i] = a * z0.storage()[i] + b * eps.storage()[i];
  }
  return out;
}

Matrix forward_noise_rows(const NoiseSchedule& schedule, const Matrix& z0,
                          std::span<const int64_t> t, const Matrix& eps) {
  if (static_cast<int64_t>(t.size()) != z0.rows()) {
    throw Error(kModule, "forward_noise", "one timestep per row required");
  }
  Matrix out = z0;
  for (int64_t r = 0; r < z0.rows(); ++r) {
    check_timestep(schedule, t[static_cast<size_t>(r)], "forward_noise");
    const double abar = schedule.alpha_bar_at(t[static_cast<size_t>(r)]);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    auto out_row = out.row(r);
    auto z_row = z0.row(r);
    auto e_row = eps.row(r);
    for (int64_t c = 0; c < z0.cols(); ++c) out_row[c] = a * z_row[c] + b * e_row[c];
  }
  return out;
}

Matrix x0_from_eps(const NoiseSchedule& schedule, const Matrix& z_t, std::span<const int64_t> t,
                   const Matrix& eps_hat) {
  if (static_cast<int64_t>(t.size()) != z_t.rows()) {
    throw Error(kModule, "x0_from_eps", "one timestep per row required");
  }
  Matrix out = z_t;
  for (int64_t r = 0; r < z_t.rows(); ++r) {
    const double abar = schedule.alpha_bar_at(t[static_cast<size_t>(r)]);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    auto out_row = out.row(r);
    auto z_row = z_t.row(r);
    auto e_row = eps_hat.row(r);
    for (int64_t c = 0; c < z_t.cols(); ++c) out_row[c] = (z_row[c] - b * e_row[c]) / a;
  }
  return out;
}

Matrix predict_eps(const DiffusionModel& model, const Matrix& z_t, std::span<const int64_t> t,
                   RunMode mode, Rng* rng, ForwardCache* cache, Matrix* backbone_input) {
  const Matrix temb = model.time_embedding.rows(t);
  const Matrix input = hconcat({z_t, temb});
  if (backbone_input != nullptr) *backbone_input = input;
  return forward(model.backbone, input, mode, rng, cache);
}

DiffusionCurve train_diffusion(DiffusionModel& model, const Matrix& latents,
                               const DiffusionConfig& config, Rng& rng) {
  if (latents.rows() < 1) throw Error(kModule, "train_diffusion", "no latents");
  if (latents.cols() != model.latent_dim) {
    throw Error(kModule, "train_diffusion", "latent width does not match model");
  }

  // Per-column standardization of the training latents, inverted after
  // sampling; degenerate columns become pure shifts.
  model.latent_means = column_means(latents);
  model.latent_stds = column_stddevs(latents);
  for (double& s : model.latent_stds) {
    if (s <= 0.0) s = 1.0;
  }
  const Matrix z0_all = model.standardize(latents);

  const int64_t n = z0_all.rows();
  const int64_t batch = std::min<int64_t>(std::max<int64_t>(1, config.batch_size), n);
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  AdamState state = AdamState::for_mlp(model.backbone, adam_cfg);

  DiffusionCurve curve;
  curve.iteration_loss.reserve(static_cast<size_t>(config.train_iters));
  std::vector<int64_t> rows(static_cast<size_t>(batch));
  std::vector<int64_t> ts(static_cast<size_t>(batch));
  for (int64_t iter = 0; iter < config.train_iters; ++iter) {
    for (auto& r : rows) r = rng.uniform_int(0, n - 1);
    const Matrix z0 = gather_rows(z0_all, rows);
    for (auto& t : ts) t = rng.uniform_int(1, model.schedule.steps);
    const Matrix eps = rng.normal_matrix(batch, model.latent_dim);
    const Matrix z_t = forward_noise_rows(model.schedule, z0, ts, eps);

    ForwardCache cache;
    const Matrix eps_hat = predict_eps(model, z_t, ts, RunMode::Train, &rng, &cache);
    Matrix eps_grad;
    const double loss = mean_squared_error(eps_hat, eps, &eps_grad);
    if (!std::isfinite(loss)) {
      throw Error(kModule, "train_diffusion",
                  "loss diverged at iteration " + std::to_string(iter));
    }
    curve.iteration_loss.push_back(loss);
    const Gradients grads = backward(model.backbone, cache, eps_grad);
    state.apply(model.backbone, grads);
  }
  return curve;
}

std::vector<int64_t> strided_timesteps(int64_t timesteps, int64_t inference_steps) {
  if (inference_steps < 1 || inference_steps > timesteps) {
    throw Error(kModule, "strided_timesteps", "inference steps must lie in [1, T]");
  }
  std::vector<int64_t> out;
  if (inference_steps == 1) {
    out.push_back(timesteps);
    return out;
  }
  const double span = static_cast<double>(timesteps - 1);
  const double denom = static_cast<double>(inference_steps - 1);
  for (int64_t i = 0; i < inference_steps; ++i) {
    out.push_back(timesteps -
                  static_cast<int64_t>(std::llround(span * static_cast<double>(i) / denom)));
  }
  return out;
}

Matrix sample(const Denoiser& denoiser, const NoiseSchedule& schedule, int64_t rows, int64_t cols,
              int64_t inference_steps, Rng& rng) {
  const auto tau = strided_timesteps(schedule.steps, inference_steps);
  Matrix x = rng.normal_matrix(rows, cols);
  std::vector<int64_t> ts(static_cast<size_t>(rows));
  for (size_t i = 0; i < tau.size(); ++i) {
    const int64_t t = tau[i];
    const int64_t next = (i + 1 < tau.size()) ? tau[i + 1] : 0;
    const Matrix eps_hat = denoiser(x, t);
    std::fill(ts.begin(), ts.end(), t);
    const Matrix x0 = x0_from_eps(schedule, x, ts, eps_hat);

    const double abar_t = schedule.alpha_bar_at(t);
    const double abar_next = schedule.alpha_bar_at(next);
    const double alpha_eff = abar_t / abar_next;
    // Gaussian posterior over the strided subsequence; collapses to the
    // standard ancestral step at stride 1 and to x0 at next == 0.
    const double coeff_x = std::sqrt(alpha_eff) * (1.0 - abar_next) / (1.0 - abar_t);
    const double coeff_x0 = std::sqrt(abar_next) * (1.0 - alpha_eff) / (1.0 - abar_t);
    const double var = (1.0 - alpha_eff) * (1.0 - abar_next) / (1.0 - abar_t);
    const double sigma = std::sqrt(std::max(0.0, var));

    Matrix mean = x;
    for (int64_t j = 0; j < mean.size(); ++j) {
      mean.storage()[j] = coeff_x * x.storage()[j] + coeff_x0 * x0.storage()[j];
    }
    if (next == 0 || sigma == 0.0) {
      x = std::move(mean);
    } else {
      const Matrix noise = rng.normal_matrix(rows, cols);
      for (int64_t j = 0; j < mean.size(); ++j) {
        mean.storage()[j] += sigma * noise.storage()[j];
      }
      x = std::move(mean);
    }
  }
  return x;
}

Matrix sample_latents(const DiffusionModel& model, int64_t rows, int64_t inference_steps,
                      Rng& rng) {
  std::vector<int64_t> ts;
  Denoiser denoiser = [&model, &ts](const Matrix& z_t, int64_t t) {
    ts.assign(static_cast<size_t>(z_t.rows()), t);
    return predict_eps(model, z_t, ts, RunMode::Eval);
  };
  const Matrix standardized =
      sample(denoiser, model.schedule, rows, model.latent_dim, inference_steps, rng);
  return model.destandardize(standardized);
}

}  // namespace silofuse
