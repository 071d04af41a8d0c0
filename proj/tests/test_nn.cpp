#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "silofuse/error.hpp"
#include "silofuse/nn.hpp"

using namespace silofuse;

namespace {

// Central finite differences over every parameter of `net`. `loss` must be a
// deterministic function of the parameters (Eval-mode paths only). This is
// the independent oracle the analytic backward pass is checked against.
template <typename LossFn>
void check_gradients_fd(Mlp& net, const Gradients& analytic, LossFn loss, double h,
                        double tolerance) {
  auto compare = [&](double got, double expected) {
    const double denom = std::max({std::abs(got), std::abs(expected), 1e-4});
    CHECK(std::abs(got - expected) / denom <= tolerance);
  };
  for (size_t li = 0; li < net.layers.size(); ++li) {
    auto& weight = net.layers[li].weight;
    for (int64_t i = 0; i < weight.size(); ++i) {
      const double saved = weight.storage()[static_cast<size_t>(i)];
      weight.storage()[static_cast<size_t>(i)] = saved + h;
      const double up = loss();
      weight.storage()[static_cast<size_t>(i)] = saved - h;
      const double down = loss();
      weight.storage()[static_cast<size_t>(i)] = saved;
      compare(analytic.weights[li].storage()[static_cast<size_t>(i)], (up - down) / (2 * h));
    }
    auto& bias = net.layers[li].bias;
    for (size_t i = 0; i < bias.size(); ++i) {
      const double saved = bias[i];
      bias[i] = saved + h;
      const double up = loss();
      bias[i] = saved - h;
      const double down = loss();
      bias[i] = saved;
      compare(analytic.biases[li][i], (up - down) / (2 * h));
    }
  }
}

Mlp random_net(std::span<const int64_t> dims, uint64_t seed) {
  Rng rng(seed);
  return make_mlp(dims, Activation::Gelu, 0.0, rng);
}

}  // namespace

TEST_CASE("gelu matches the erf-based normal CDF") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(10.0) == doctest::Approx(10.0).epsilon(1e-6));
  // Oracle: Phi(1) computed directly from erf.
  const double phi1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
  CHECK(gelu(1.0) == doctest::Approx(1.0 * phi1).epsilon(1e-9));
  CHECK(gelu(1.0) == doctest::Approx(0.841345).epsilon(1e-5));
  CHECK(gelu(-10.0) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("forward: identity weights reproduce the input") {
  Mlp net;
  Layer layer;
  layer.weight = Matrix(3, 3);
  for (int i = 0; i < 3; ++i) layer.weight.at(i, i) = 1.0;
  layer.bias = {0.0, 0.0, 0.0};
  net.layers.push_back(layer);
  Rng rng(1);
  const Matrix x = rng.normal_matrix(5, 3);
  CHECK(forward(net, x, RunMode::Eval) == x);
}

TEST_CASE("forward: zero weights give the bias on every row") {
  Mlp net;
  Layer layer;
  layer.weight = Matrix(4, 2);
  layer.bias = {1.5, -2.5};
  net.layers.push_back(layer);
  Rng rng(2);
  const Matrix out = forward(net, rng.normal_matrix(7, 4), RunMode::Eval);
  for (int64_t r = 0; r < 7; ++r) {
    CHECK(out.at(r, 0) == 1.5);
    CHECK(out.at(r, 1) == -2.5);
  }
}

TEST_CASE("forward: fixed two-layer net matches hand arithmetic") {
  // Layer 1: W1 = [[1,0],[0,2],[1,1]], b1 = (0.5, -1), Identity.
  // Layer 2: W2 = [[1,1],[2,0]], b2 = (0, 0.25), Identity.
  Mlp net;
  Layer l1;
  l1.weight = Matrix(3, 2, {1, 0, 0, 2, 1, 1});
  l1.bias = {0.5, -1.0};
  Layer l2;
  l2.weight = Matrix(2, 2, {1, 1, 2, 0});
  l2.bias = {0.0, 0.25};
  net.layers = {l1, l2};

  const Matrix x(1, 3, {1.0, 2.0, 3.0});
  // h = (1*1 + 0*2 + 1*3 + 0.5, 0*1 + 2*2 + 1*3 - 1) = (4.5, 6)
  // y = (4.5*1 + 6*2, 4.5*1 + 6*0 + 0.25) = (16.5, 4.75)
  const Matrix y = forward(net, x, RunMode::Eval);
  CHECK(y.at(0, 0) == doctest::Approx(16.5));
  CHECK(y.at(0, 1) == doctest::Approx(4.75));
}

TEST_CASE("forward rejects dimension mismatches") {
  Mlp net = random_net(std::vector<int64_t>{3, 4, 2}, 3);
  Rng rng(4);
  CHECK_THROWS_AS(forward(net, rng.normal_matrix(5, 7), RunMode::Eval), Error);
}

TEST_CASE("backward matches central finite differences on a random 3-layer net") {
  Mlp net = random_net(std::vector<int64_t>{4, 6, 5, 3}, 31);
  Rng rng(32);
  const Matrix x = rng.normal_matrix(8, 4);
  const Matrix target = rng.normal_matrix(8, 3);

  ForwardCache cache;
  const Matrix out = forward(net, x, RunMode::Eval, nullptr, &cache);
  Matrix grad_out;
  mean_squared_error(out, target, &grad_out);
  const Gradients grads = backward(net, cache, grad_out);

  auto loss = [&] { return mean_squared_error(forward(net, x, RunMode::Eval), target); };
  check_gradients_fd(net, grads, loss, 1e-4, 1e-4);
}

TEST_CASE("backward: zero output gradient gives zero parameter gradients") {
  Mlp net = random_net(std::vector<int64_t>{3, 4, 2}, 5);
  Rng rng(6);
  const Matrix x = rng.normal_matrix(4, 3);
  ForwardCache cache;
  forward(net, x, RunMode::Eval, nullptr, &cache);
  const Gradients grads = backward(net, cache, Matrix(4, 2));
  for (const auto& w : grads.weights) {
    for (double v : w.storage()) CHECK(v == 0.0);
  }
}

TEST_CASE("backward: single linear layer has the closed-form weight gradient") {
  Mlp net;
  Layer layer;
  Rng rng(7);
  layer.weight = rng.normal_matrix(3, 2);
  layer.bias = {0.0, 0.0};
  net.layers.push_back(layer);
  const Matrix x = rng.normal_matrix(5, 3);
  const Matrix g = rng.normal_matrix(5, 2);
  ForwardCache cache;
  forward(net, x, RunMode::Eval, nullptr, &cache);
  const Gradients grads = backward(net, cache, g);
  const Matrix expected = matmul(x, g, /*transpose_a=*/true);
  for (int64_t i = 0; i < expected.size(); ++i) {
    CHECK(grads.weights[0].storage()[static_cast<size_t>(i)] ==
          doctest::Approx(expected.storage()[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("backward rejects a cache from different parameters") {
  Mlp net = random_net(std::vector<int64_t>{3, 4, 2}, 8);
  Mlp other = random_net(std::vector<int64_t>{3, 4, 2}, 9);
  Rng rng(10);
  const Matrix x = rng.normal_matrix(4, 3);
  ForwardCache cache;
  forward(net, x, RunMode::Eval, nullptr, &cache);
  CHECK_THROWS_AS(backward(other, cache, Matrix(4, 2)), Error);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Mlp net = random_net(std::vector<int64_t>{3, 4, 2}, 11);
  const Mlp before = net;
  AdamState state = AdamState::for_mlp(net, {});
  state.apply(net, zero_gradients(net));
  for (size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(net.layers[i].weight == before.layers[i].weight);
    CHECK(net.layers[i].bias == before.layers[i].bias);
  }
}

TEST_CASE("adam: first step moves a zero scalar weight by about -lr") {
  // Oracle: hand evaluation of one Adam step with w=0, g=1.
  // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1, w -= lr * 1/(1 + eps).
  Mlp net;
  Layer layer;
  layer.weight = Matrix(1, 1, {0.0});
  layer.bias = {0.0};
  net.layers.push_back(layer);
  AdamConfig cfg;  // lr = 1e-3
  AdamState state = AdamState::for_mlp(net, cfg);
  Gradients g = zero_gradients(net);
  g.weights[0].at(0, 0) = 1.0;
  state.apply(net, g);
  const double expected = -cfg.lr * 1.0 / (1.0 + cfg.eps);
  CHECK(net.layers[0].weight.at(0, 0) == doctest::Approx(expected).epsilon(1e-9));

  // A second identical step keeps moving the weight down.
  const double after_one = net.layers[0].weight.at(0, 0);
  state.apply(net, g);
  CHECK(net.layers[0].weight.at(0, 0) < after_one);
}

TEST_CASE("adam with lr=0 is the identity") {
  Mlp net = random_net(std::vector<int64_t>{3, 5, 2}, 12);
  const Mlp before = net;
  AdamConfig cfg;
  cfg.lr = 0.0;
  AdamState state = AdamState::for_mlp(net, cfg);
  Rng rng(13);
  Gradients g = zero_gradients(net);
  for (auto& w : g.weights) rng.fill_normal(w);
  state.apply(net, g);
  for (size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(net.layers[i].weight == before.layers[i].weight);
  }
}

TEST_CASE("eval-mode forward is deterministic; dropout 0 train equals eval") {
  Rng init(14);
  Mlp net = make_mlp(std::vector<int64_t>{4, 8, 3}, Activation::Gelu, 0.0, init);
  Rng rng(15);
  const Matrix x = rng.normal_matrix(6, 4);
  const Matrix a = forward(net, x, RunMode::Eval);
  const Matrix b = forward(net, x, RunMode::Eval);
  CHECK(a == b);
  Rng dropout_rng(16);
  const Matrix c = forward(net, x, RunMode::Train, &dropout_rng);
  CHECK(a == c);
}

TEST_CASE("train-mode dropout scales by the keep probability") {
  Rng init(17);
  Mlp net = make_mlp(std::vector<int64_t>{4, 64, 3}, Activation::Identity, 0.5, init);
  Rng rng(18);
  const Matrix x(1, 4, {1.0, 1.0, 1.0, 1.0});
  ForwardCache cache;
  Rng dropout_rng(19);
  forward(net, x, RunMode::Train, &dropout_rng, &cache);
  // Inverted dropout: mask entries are 0 or 1/(1-p).
  int64_t kept = 0;
  for (double v : cache.dropout_masks[0].storage()) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));
    kept += v != 0.0;
  }
  CHECK(kept > 10);
  CHECK(kept < 55);
  (void)rng;
}

TEST_CASE("softmax cross-entropy: uniform and peaked cases") {
  const Matrix logits(2, 4);  // all zeros -> uniform
  const std::vector<int64_t> labels{0, 3};
  CHECK(softmax_cross_entropy(logits, labels) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Matrix grad;
  softmax_cross_entropy(logits, labels, &grad);
  // d(meanCE)/dlogit = (softmax - onehot)/n.
  CHECK(grad.at(0, 0) == doctest::Approx((0.25 - 1.0) / 2.0));
  CHECK(grad.at(0, 1) == doctest::Approx(0.25 / 2.0));
}

TEST_CASE("gradient property: analytic vs finite differences across 20 seeds") {
  for (uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    const int64_t in = rng.uniform_int(2, 5);
    const int64_t hidden = rng.uniform_int(3, 8);
    const int64_t out = rng.uniform_int(2, 4);
    Mlp net = random_net(std::vector<int64_t>{in, hidden, out}, seed * 7 + 1);
    const Matrix x = rng.normal_matrix(5, in);

    // Alternate between the two loss families used downstream.
    if (seed % 2 == 0) {
      const Matrix target = rng.normal_matrix(5, out);
      ForwardCache cache;
      const Matrix pred = forward(net, x, RunMode::Eval, nullptr, &cache);
      Matrix grad_out;
      mean_squared_error(pred, target, &grad_out);
      const Gradients grads = backward(net, cache, grad_out);
      auto loss = [&] { return mean_squared_error(forward(net, x, RunMode::Eval), target); };
      check_gradients_fd(net, grads, loss, 1e-4, 1e-3);
    } else {
      std::vector<int64_t> labels;
      for (int i = 0; i < 5; ++i) labels.push_back(rng.uniform_int(0, out - 1));
      ForwardCache cache;
      const Matrix logits = forward(net, x, RunMode::Eval, nullptr, &cache);
      Matrix grad_out;
      softmax_cross_entropy(logits, labels, &grad_out);
      const Gradients grads = backward(net, cache, grad_out);
      auto loss = [&] { return softmax_cross_entropy(forward(net, x, RunMode::Eval), labels); };
      check_gradients_fd(net, grads, loss, 1e-4, 1e-3);
    }
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Mlp net = random_net(std::vector<int64_t>{5, 9, 4}, 77);
  net.layers[0].dropout = 0.25;
  const std::string path = "/tmp/silofuse_nn_ckpt.bin";
  save_mlp_file(net, path);
  const Mlp loaded = load_mlp_file(path);
  REQUIRE(loaded.layers.size() == net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(loaded.layers[i].weight == net.layers[i].weight);
    CHECK(loaded.layers[i].bias == net.layers[i].bias);
    CHECK(loaded.layers[i].activation == net.layers[i].activation);
    CHECK(loaded.layers[i].dropout == net.layers[i].dropout);
  }
}
