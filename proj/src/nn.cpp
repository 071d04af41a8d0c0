#include "silofuse/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "silofuse/error.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "neural-net";
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double std_normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
}  // namespace

double gelu(double x) { return x * std_normal_cdf(x); }

double gelu_derivative(double x) { return std_normal_cdf(x) + x * std_normal_pdf(x); }

int64_t Mlp::parameter_count() const {
  int64_t count = 0;
  for (const auto& layer : layers) {
    count += layer.weight.size() + static_cast<int64_t>(layer.bias.size());
  }
  return count;
}

void Mlp::validate() const {
  if (layers.empty()) throw Error(kModule, "mlp", "no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (static_cast<int64_t>(layer.bias.size()) != layer.output_dim()) {
      throw Error(kModule, "mlp", "bias width mismatch at layer " + std::to_string(i));
    }
    if (layer.dropout < 0.0 || layer.dropout >= 1.0) {
      throw Error(kModule, "mlp", "dropout rate must lie in [0, 1)");
    }
    if (i > 0 && layers[i - 1].output_dim() != layer.input_dim()) {
      throw Error(kModule, "mlp", "adjacent layer dimensions do not compose at layer " +
                                      std::to_string(i));
    }
  }
}

Mlp make_mlp(std::span<const int64_t> dims, Activation hidden_activation, double dropout,
             Rng& rng) {
  if (dims.size() < 2) throw Error(kModule, "make_mlp", "need at least input and output dims");
  Mlp mlp;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const int64_t fan_in = dims[i];
    const int64_t fan_out = dims[i + 1];
    const bool last = (i + 2 == dims.size());
    Layer layer;
    layer.weight = Matrix(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : layer.weight.storage()) w = rng.uniform(-limit, limit);
    layer.bias.assign(static_cast<size_t>(fan_out), 0.0);
    layer.activation = last ? Activation::Identity : hidden_activation;
    layer.dropout = last ? 0.0 : dropout;
    mlp.layers.push_back(std::move(layer));
  }
  mlp.validate();
  return mlp;
}

Matrix forward(const Mlp& params, const Matrix& batch, RunMode mode, Rng* rng,
               ForwardCache* cache) {
  if (batch.cols() != params.input_dim()) {
    throw Error(kModule, "forward",
                "batch width " + std::to_string(batch.cols()) + " does not match input dim " +
                    std::to_string(params.input_dim()));
  }
  if (cache != nullptr) {
    cache->params = &params;
    cache->mode = mode;
    cache->inputs.clear();
    cache->preactivations.clear();
    cache->dropout_masks.clear();
  }
  Matrix x = batch;
  for (const auto& layer : params.layers) {
    if (cache != nullptr) cache->inputs.push_back(x);
    Matrix z = matmul(x, layer.weight);
    add_row_broadcast(z, layer.bias);
    if (cache != nullptr) cache->preactivations.push_back(z);
    Matrix h = z;
    if (layer.activation == Activation::Gelu) {
      for (double& v : h.storage()) v = gelu(v);
    }
    Matrix mask;
    if (mode == RunMode::Train && layer.dropout > 0.0) {
      if (rng == nullptr) throw Error(kModule, "forward", "dropout requires an RNG in Train mode");
      const double keep = 1.0 - layer.dropout;
      mask = Matrix(h.rows(), h.cols());
      for (int64_t i = 0; i < mask.size(); ++i) {
        mask.storage()[i] = rng->uniform01() < keep ? 1.0 / keep : 0.0;
      }
      for (int64_t i = 0; i < h.size(); ++i) h.storage()[i] *= mask.storage()[i];
    }
    if (cache != nullptr) cache->dropout_masks.push_back(std::move(mask));
    x = std::move(h);
  }
  return x;
}

Gradients zero_gradients(const Mlp& params) {
  Gradients g;
  for (const auto& layer : params.layers) {
    g.weights.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.biases.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  for (size_t i = 0; i < weights.size(); ++i) {
    add_in_place(weights[i], other.weights[i]);
    for (size_t j = 0; j < biases[i].size(); ++j) biases[i][j] += other.biases[i][j];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights) scale_in_place(w, s);
  for (auto& b : biases) {
    for (double& v : b) v *= s;
  }
}

Gradients backward(const Mlp& params, const ForwardCache& cache, const Matrix& output_grad,
                   Matrix* input_grad) {
  if (cache.params != &params || cache.inputs.size() != params.layers.size()) {
    throw Error(kModule, "backward", "cache does not match parameters");
  }
  if (output_grad.rows() != cache.preactivations.back().rows() ||
      output_grad.cols() != params.output_dim()) {
    throw Error(kModule, "backward", "output gradient shape mismatch");
  }
  Gradients grads = zero_gradients(params);
  Matrix delta = output_grad;
  for (int64_t li = static_cast<int64_t>(params.layers.size()) - 1; li >= 0; --li) {
    const auto i = static_cast<size_t>(li);
    const auto& layer = params.layers[i];
    if (!cache.dropout_masks[i].empty()) {
      delta = hadamard(delta, cache.dropout_masks[i]);
    }
    if (layer.activation == Activation::Gelu) {
      const Matrix& z = cache.preactivations[i];
      for (int64_t j = 0; j < delta.size(); ++j) {
        delta.storage()[j] *= gelu_derivative(z.storage()[j]);
      }
    }
    grads.weights[i] = matmul(cache.inputs[i], delta, /*transpose_a=*/true);
    grads.biases[i] = column_sums(delta);
    if (li > 0 || input_grad != nullptr) {
      delta = matmul(delta, layer.weight, false, /*transpose_b=*/true);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return grads;
}

AdamState AdamState::for_mlp(const Mlp& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& layer : params.layers) {
    state.m_weights.emplace_back(layer.weight.rows(), layer.weight.cols());
    state.v_weights.emplace_back(layer.weight.rows(), layer.weight.cols());
    state.m_biases.emplace_back(layer.bias.size(), 0.0);
    state.v_biases.emplace_back(layer.bias.size(), 0.0);
  }
  return state;
}

void AdamState::apply(Mlp& params, const Gradients& grads) {
  if (m_weights.size() != params.layers.size()) {
    throw Error(kModule, "adam_step", "state does not match parameters");
  }
  ++step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (size_t i = 0; i < params.layers.size(); ++i) {
    auto& layer = params.layers[i];
    auto& mw = m_weights[i].storage();
    auto& vw = v_weights[i].storage();
    const auto& gw = grads.weights[i].storage();
    auto& w = layer.weight.storage();
    for (size_t j = 0; j < w.size(); ++j) {
      mw[j] = b1 * mw[j] + (1.0 - b1) * gw[j];
      vw[j] = b2 * vw[j] + (1.0 - b2) * gw[j] * gw[j];
      const double mhat = mw[j] / bias1;
      const double vhat = vw[j] / bias2;
      w[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
    auto& mb = m_biases[i];
    auto& vb = v_biases[i];
    const auto& gb = grads.biases[i];
    auto& b = layer.bias;
    for (size_t j = 0; j < b.size(); ++j) {
      mb[j] = b1 * mb[j] + (1.0 - b1) * gb[j];
      vb[j] = b2 * vb[j] + (1.0 - b2) * gb[j] * gb[j];
      const double mhat = mb[j] / bias1;
      const double vhat = vb[j] / bias2;
      b[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  for (int64_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double max = row[0];
    for (int64_t c = 1; c < out.cols(); ++c) max = std::max(max, row[c]);
    double sum = 0.0;
    for (int64_t c = 0; c < out.cols(); ++c) {
      row[c] = std::exp(row[c] - max);
      sum += row[c];
    }
    for (int64_t c = 0; c < out.cols(); ++c) row[c] /= sum;
  }
  return out;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int64_t> labels,
                             Matrix* logits_grad) {
  if (static_cast<int64_t>(labels.size()) != logits.rows()) {
    throw Error(kModule, "softmax_cross_entropy", "label count mismatch");
  }
  const Matrix probs = softmax_rows(logits);
  const double n = static_cast<double>(logits.rows());
  double loss = 0.0;
  for (int64_t r = 0; r < logits.rows(); ++r) {
    const int64_t y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= logits.cols()) {
      throw Error(kModule, "softmax_cross_entropy", "label out of range");
    }
    loss -= std::log(std::max(probs.at(r, y), 1e-300));
  }
  loss /= n;
  if (logits_grad != nullptr) {
    *logits_grad = probs;
    for (int64_t r = 0; r < logits.rows(); ++r) {
      logits_grad->at(r, labels[static_cast<size_t>(r)]) -= 1.0;
    }
    scale_in_place(*logits_grad, 1.0 / n);
  }
  return loss;
}

double mean_squared_error(const Matrix& prediction, const Matrix& target,
                          Matrix* prediction_grad) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw Error(kModule, "mean_squared_error", "shape mismatch");
  }
  const double n = static_cast<double>(prediction.size());
  double loss = 0.0;
  for (int64_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction.storage()[i] - target.storage()[i];
    loss += d * d;
  }
  loss /= n;
  if (prediction_grad != nullptr) {
    *prediction_grad = prediction;
    for (int64_t i = 0; i < prediction.size(); ++i) {
      prediction_grad->storage()[i] =
          2.0 * (prediction.storage()[i] - target.storage()[i]) / n;
    }
  }
  return loss;
}

namespace {
constexpr char kMagic[4] = {'S', 'F', 'N', 'N'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(kModule, "load_mlp", "truncated checkpoint");
  return v;
}
}  // namespace

void save_mlp(const Mlp& params, std::ostream& out) {
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<uint32_t>(params.layers.size()));
  for (const auto& layer : params.layers) {
    write_pod(out, static_cast<uint32_t>(layer.input_dim()));
    write_pod(out, static_cast<uint32_t>(layer.output_dim()));
    write_pod(out, static_cast<uint8_t>(layer.activation));
    write_pod(out, layer.dropout);
    out.write(reinterpret_cast<const char*>(layer.weight.data()),
              static_cast<std::streamsize>(layer.weight.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(layer.bias.data()),
              static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
  }
}

Mlp load_mlp(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(kModule, "load_mlp", "bad checkpoint magic");
  }
  const auto version = read_pod<uint32_t>(in);
  if (version != kVersion) {
    throw Error(kModule, "load_mlp", "unsupported checkpoint version " + std::to_string(version));
  }
  const auto layer_count = read_pod<uint32_t>(in);
  Mlp mlp;
  for (uint32_t i = 0; i < layer_count; ++i) {
    const auto rows = read_pod<uint32_t>(in);
    const auto cols = read_pod<uint32_t>(in);
    const auto act = read_pod<uint8_t>(in);
    const auto dropout = read_pod<double>(in);
    Layer layer;
    layer.weight = Matrix(rows, cols);
    layer.bias.assign(cols, 0.0);
    layer.activation = static_cast<Activation>(act);
    layer.dropout = dropout;
    in.read(reinterpret_cast<char*>(layer.weight.data()),
            static_cast<std::streamsize>(layer.weight.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(layer.bias.data()),
            static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
    if (!in) throw Error(kModule, "load_mlp", "truncated checkpoint");
    mlp.layers.push_back(std::move(layer));
  }
  mlp.validate();
  return mlp;
}

void save_mlp_file(const Mlp& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "save_mlp", "cannot open '" + path + "'");
  save_mlp(params, out);
}

Mlp load_mlp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, "load_mlp", "cannot open '" + path + "'");
  return load_mlp(in);
}

}  // namespace silofuse
