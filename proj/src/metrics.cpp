#include "silofuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "silofuse/autoencoder.hpp"
#include "silofuse/error.hpp"
#include "silofuse/nn.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "benchmark";

void require_same_schema(const Table& a, const Table& b, const char* op) {
  if (a.schema != b.schema) throw Error(kModule, op, "tables have different schemas");
}

// Equal row counts via seeded subsampling of the larger table.
std::pair<Table, Table> align_rows(const Table& real, const Table& synth, Rng& rng) {
  const int64_t n = std::min(real.row_count(), synth.row_count());
  Table r = subsample_rows(real, n, rng);
  Table s = subsample_rows(synth, n, rng);
  return {std::move(r), std::move(s)};
}

std::vector<int64_t> to_labels(std::span<const double> values) {
  std::vector<int64_t> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = static_cast<int64_t>(values[i]);
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// Quantile cut points (deduplicated) for decile discretization.
std::vector<double> decile_edges(std::vector<double> values, int64_t bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  const auto n = static_cast<int64_t>(values.size());
  for (int64_t i = 1; i < bins; ++i) {
    const auto pos = static_cast<size_t>((i * n) / bins);
    const double edge = values[std::min<size_t>(pos, values.size() - 1)];
    if (edges.empty() || edge > edges.back()) edges.push_back(edge);
  }
  return edges;
}

std::vector<int64_t> discretize(std::span<const double> values, const std::vector<double>& edges) {
  std::vector<int64_t> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    out[i] = std::upper_bound(edges.begin(), edges.end(), values[i]) - edges.begin();
  }
  return out;
}

std::vector<double> category_frequencies(std::span<const double> column, int64_t cardinality) {
  std::vector<double> freq(static_cast<size_t>(cardinality), 0.0);
  for (double v : column) freq[static_cast<size_t>(v)] += 1.0;
  if (!column.empty()) {
    for (double& f : freq) f /= static_cast<double>(column.size());
  }
  return freq;
}

std::vector<double> histogram_frequencies(std::span<const double> column, double lo, double hi,
                                          int64_t bins) {
  std::vector<double> freq(static_cast<size_t>(bins), 0.0);
  const double width = hi - lo;
  for (double v : column) {
    int64_t bin = width > 0.0 ? static_cast<int64_t>((v - lo) / width * static_cast<double>(bins))
                              : 0;
    bin = std::clamp<int64_t>(bin, 0, bins - 1);
    freq[static_cast<size_t>(bin)] += 1.0;
  }
  if (!column.empty()) {
    for (double& f : freq) f /= static_cast<double>(column.size());
  }
  return freq;
}

}  // namespace

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(kModule, "pearson", "need paired nonempty sequences");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 && syy == 0.0) return 1.0;  // both degenerate: identical shape
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double theils_u(std::span<const int64_t> x, std::span<const int64_t> y, int64_t x_cardinality,
                int64_t y_cardinality) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(kModule, "theils_u", "need paired nonempty sequences");
  }
  const auto kx = static_cast<size_t>(x_cardinality);
  const auto ky = static_cast<size_t>(y_cardinality);
  std::vector<double> joint(kx * ky, 0.0);
  std::vector<double> px(kx, 0.0), py(ky, 0.0);
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    joint[static_cast<size_t>(x[i]) * ky + static_cast<size_t>(y[i])] += 1.0 / n;
    px[static_cast<size_t>(x[i])] += 1.0 / n;
    py[static_cast<size_t>(y[i])] += 1.0 / n;
  }
  const double hx = entropy(px);
  if (hx == 0.0) return 0.0;
  // H(X|Y) = sum_y p(y) H(X | Y=y)
  double hxy = 0.0;
  for (size_t j = 0; j < ky; ++j) {
    if (py[j] <= 0.0) continue;
    for (size_t i = 0; i < kx; ++i) {
      const double pxy = joint[i * ky + j];
      if (pxy > 0.0) hxy -= pxy * std::log(pxy / py[j]);
    }
  }
  return std::clamp((hx - hxy) / hx, 0.0, 1.0);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(kModule, "ks_statistic", "empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  size_t i = 0, j = 0;
  double stat = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    stat = std::max(stat, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return stat;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(kModule, "total_variation", "length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

double jensen_shannon_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(kModule, "jensen_shannon", "length mismatch");
  double divergence = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) divergence += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) divergence += 0.5 * q[i] * std::log2(q[i] / m);
  }
  divergence = std::clamp(divergence, 0.0, 1.0);
  return std::sqrt(divergence);
}

double macro_f1(std::span<const int64_t> truth, std::span<const int64_t> predicted,
                int64_t cardinality) {
  if (truth.size() != predicted.size()) throw Error(kModule, "macro_f1", "length mismatch");
  double sum = 0.0;
  for (int64_t c = 0; c < cardinality; ++c) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c;
      const bool p = predicted[i] == c;
      tp += (t && p);
      fp += (!t && p);
      fn += (t && !p);
    }
    const int64_t denom = 2 * tp + fp + fn;
    sum += denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
  }
  return sum / static_cast<double>(cardinality);
}

double d2_absolute_error(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw Error(kModule, "d2_absolute_error", "need paired nonempty sequences");
  }
  std::vector<double> sorted(truth.begin(), truth.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double median =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mae = 0.0, mae_base = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    mae += std::abs(truth[i] - predicted[i]);
    mae_base += std::abs(truth[i] - median);
  }
  mae /= static_cast<double>(n);
  mae_base /= static_cast<double>(n);
  if (mae_base == 0.0) return mae == 0.0 ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - mae / mae_base);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(kModule, "percentile", "empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - std::floor(pos);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// --- sub-scores ----------------------------------------------------------------

double column_similarity(const Table& real_in, const Table& synth_in, Rng& rng) {
  require_same_schema(real_in, synth_in, "column_similarity");
  auto [real, synth] = align_rows(real_in, synth_in, rng);
  if (real.row_count() == 0) throw Error(kModule, "column_similarity", "empty tables");

  double total = 0.0;
  for (int64_t c = 0; c < real.column_count(); ++c) {
    const auto& col = real.schema.at(c);
    double score = 0.0;
    if (col.is_categorical()) {
      // Theil's U of category given source indicator over the pooled rows;
      // identical marginals give U = 0.
      std::vector<int64_t> category, source;
      for (double v : real.column(c)) {
        category.push_back(static_cast<int64_t>(v));
        source.push_back(0);
      }
      for (double v : synth.column(c)) {
        category.push_back(static_cast<int64_t>(v));
        source.push_back(1);
      }
      const double u = theils_u(category, source, col.cardinality(), 2);
      score = (1.0 - u) * 100.0;
    } else {
      auto r = real.column(c);
      auto s = synth.column(c);
      std::sort(r.begin(), r.end());
      std::sort(s.begin(), s.end());
      score = std::max(0.0, pearson_correlation(r, s)) * 100.0;
    }
    total += score;
  }
  return total / static_cast<double>(real.column_count());
}

namespace {

// Pairwise association matrix: Pearson for continuous-continuous pairs,
// Theil's U (with decile-discretized continuous sides) otherwise.
Matrix association_matrix(const Table& table, int64_t decile_bins) {
  const int64_t d = table.column_count();
  std::vector<std::vector<int64_t>> discretized(static_cast<size_t>(d));
  std::vector<int64_t> cardinality(static_cast<size_t>(d));
  for (int64_t c = 0; c < d; ++c) {
    const auto& col = table.schema.at(c);
    if (col.is_categorical()) {
      discretized[static_cast<size_t>(c)] = to_labels(table.column(c));
      cardinality[static_cast<size_t>(c)] = col.cardinality();
    } else {
      const auto edges = decile_edges(table.column(c), decile_bins);
      discretized[static_cast<size_t>(c)] = discretize(table.column(c), edges);
      cardinality[static_cast<size_t>(c)] = static_cast<int64_t>(edges.size()) + 1;
    }
  }
  Matrix assoc(d, d, 1.0);
  for (int64_t a = 0; a < d; ++a) {
    for (int64_t b = 0; b < d; ++b) {
      if (a == b) continue;
      const bool cont_pair =
          !table.schema.at(a).is_categorical() && !table.schema.at(b).is_categorical();
      if (cont_pair) {
        assoc.at(a, b) = pearson_correlation(table.column(a), table.column(b));
      } else {
        assoc.at(a, b) = theils_u(discretized[static_cast<size_t>(a)],
                                  discretized[static_cast<size_t>(b)],
                                  cardinality[static_cast<size_t>(a)],
                                  cardinality[static_cast<size_t>(b)]);
      }
    }
  }
  return assoc;
}

}  // namespace

double correlation_similarity(const Table& real_in, const Table& synth_in, Rng& rng,
                              const MetricsConfig& config) {
  require_same_schema(real_in, synth_in, "correlation_similarity");
  if (real_in.column_count() < 2) {
    throw Error(kModule, "correlation_similarity", "need at least two columns");
  }
  auto [real, synth] = align_rows(real_in, synth_in, rng);
  const Matrix ar = association_matrix(real, config.decile_bins);
  const Matrix as = association_matrix(synth, config.decile_bins);
  const int64_t d = real.column_count();
  double acc = 0.0;
  int64_t pairs = 0;
  for (int64_t a = 0; a < d; ++a) {
    for (int64_t b = 0; b < d; ++b) {
      if (a == b) continue;
      acc += std::abs(ar.at(a, b) - as.at(a, b));
      ++pairs;
    }
  }
  const double mean_diff = acc / static_cast<double>(pairs);
  return std::max(0.0, 1.0 - mean_diff) * 100.0;
}

double js_similarity(const Table& real_in, const Table& synth_in, Rng& rng,
                     const MetricsConfig& config) {
  require_same_schema(real_in, synth_in, "js_similarity");
  auto [real, synth] = align_rows(real_in, synth_in, rng);
  double total = 0.0;
  for (int64_t c = 0; c < real.column_count(); ++c) {
    const auto& col = real.schema.at(c);
    double distance = 0.0;
    if (col.is_categorical()) {
      distance = jensen_shannon_distance(category_frequencies(real.column(c), col.cardinality()),
                                         category_frequencies(synth.column(c), col.cardinality()));
    } else {
      const auto rv = real.column(c);
      const auto sv = synth.column(c);
      double lo = rv.empty() ? 0.0 : rv.front(), hi = lo;
      for (double v : rv) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      for (double v : sv) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      distance = jensen_shannon_distance(
          histogram_frequencies(rv, lo, hi, config.histogram_bins),
          histogram_frequencies(sv, lo, hi, config.histogram_bins));
    }
    total += distance;
  }
  return (1.0 - total / static_cast<double>(real.column_count())) * 100.0;
}

double ks_similarity(const Table& real_in, const Table& synth_in, Rng& rng) {
  require_same_schema(real_in, synth_in, "ks_similarity");
  auto [real, synth] = align_rows(real_in, synth_in, rng);
  double total = 0.0;
  for (int64_t c = 0; c < real.column_count(); ++c) {
    const auto& col = real.schema.at(c);
    double distance = 0.0;
    if (col.is_categorical()) {
      // ECDFs are undefined on unordered categories; total variation stands in.
      distance = total_variation(category_frequencies(real.column(c), col.cardinality()),
                                 category_frequencies(synth.column(c), col.cardinality()));
    } else {
      distance = ks_statistic(real.column(c), synth.column(c));
    }
    total += distance;
  }
  return (1.0 - total / static_cast<double>(real.column_count())) * 100.0;
}

// --- learner -------------------------------------------------------------------

struct Learner::LearnerModel {
  Mlp net;
  bool classifier = true;
  int64_t cardinality = 2;
};

namespace {

Learner train_learner(const Table& features, const Matrix& targets,
                      std::span<const int64_t> labels, bool classifier, int64_t cardinality,
                      const MetricsConfig& config, Rng& rng, int64_t epochs,
                      double weight_decay) {
  Learner learner;
  learner.feature_schema = features.schema;
  learner.normalizer = fit_normalizer(features);
  const Matrix inputs = one_hot_encode(learner.normalizer.apply(features));

  const int64_t out_dim = classifier ? cardinality : 1;
  const std::vector<int64_t> dims{inputs.cols(), config.learner_hidden, config.learner_hidden,
                                  out_dim};
  auto model = std::make_shared<Learner::LearnerModel>();
  model->classifier = classifier;
  model->cardinality = cardinality;
  model->net = make_mlp(dims, Activation::Gelu, 0.0, rng);

  AdamConfig adam_cfg;
  adam_cfg.lr = config.learner_lr;
  AdamState state = AdamState::for_mlp(model->net, adam_cfg);
  const int64_t n = inputs.rows();
  const int64_t batch = std::min<int64_t>(std::max<int64_t>(1, config.learner_batch), n);

  for (int64_t epoch = 0; epoch < epochs; ++epoch) {
    auto order = rng.permutation(n);
    for (int64_t start = 0; start + batch <= n; start += batch) {
      std::vector<int64_t> rows(order.begin() + start, order.begin() + start + batch);
      const Matrix x = gather_rows(inputs, rows);
      ForwardCache cache;
      const Matrix out = forward(model->net, x, RunMode::Train, &rng, &cache);
      Matrix out_grad;
      double loss = 0.0;
      if (classifier) {
        std::vector<int64_t> batch_labels(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
          batch_labels[i] = labels[static_cast<size_t>(rows[i])];
        }
        loss = softmax_cross_entropy(out, batch_labels, &out_grad);
      } else {
        loss = mean_squared_error(out, gather_rows(targets, rows), &out_grad);
      }
      if (!std::isfinite(loss)) {
        throw Error(kModule, "train_learner", "loss diverged at epoch " + std::to_string(epoch));
      }
      Gradients grads = backward(model->net, cache, out_grad);
      if (weight_decay > 0.0) {
        for (size_t li = 0; li < grads.weights.size(); ++li) {
          axpy(grads.weights[li], weight_decay, model->net.layers[li].weight);
        }
      }
      state.apply(model->net, grads);
    }
  }
  learner.model = std::move(model);
  return learner;
}

}  // namespace

Learner train_classifier(const Table& features, std::span<const int64_t> labels,
                         int64_t cardinality, const MetricsConfig& config, Rng& rng) {
  if (static_cast<int64_t>(labels.size()) != features.row_count()) {
    throw Error(kModule, "train_classifier", "label count mismatch");
  }
  return train_learner(features, Matrix(), labels, true, cardinality, config, rng,
                       config.learner_epochs, 0.0);
}

Learner train_regressor(const Table& features, std::span<const double> targets,
                        const MetricsConfig& config, Rng& rng) {
  if (static_cast<int64_t>(targets.size()) != features.row_count()) {
    throw Error(kModule, "train_regressor", "target count mismatch");
  }
  Matrix target_matrix(features.row_count(), 1,
                       std::vector<double>(targets.begin(), targets.end()));
  return train_learner(features, target_matrix, {}, false, 0, config, rng,
                       config.learner_epochs, 0.0);
}

Matrix Learner::predict_proba(const Table& features) const {
  if (!model || !model->classifier) throw Error(kModule, "predict_proba", "not a classifier");
  const Matrix inputs = one_hot_encode(normalizer.apply(features));
  return softmax_rows(forward(model->net, inputs, RunMode::Eval));
}

std::vector<int64_t> Learner::predict_class(const Table& features) const {
  const Matrix probs = predict_proba(features);
  std::vector<int64_t> out(static_cast<size_t>(probs.rows()));
  for (int64_t r = 0; r < probs.rows(); ++r) {
    int64_t best = 0;
    for (int64_t c = 1; c < probs.cols(); ++c) {
      if (probs.at(r, c) > probs.at(r, best)) best = c;
    }
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

std::vector<double> Learner::predict_value(const Table& features) const {
  if (!model || model->classifier) throw Error(kModule, "predict_value", "not a regressor");
  const Matrix inputs = one_hot_encode(normalizer.apply(features));
  const Matrix out = forward(model->net, inputs, RunMode::Eval);
  std::vector<double> values(static_cast<size_t>(out.rows()));
  for (int64_t r = 0; r < out.rows(); ++r) values[static_cast<size_t>(r)] = out.at(r, 0);
  return values;
}

double propensity_similarity(const Table& real_in, const Table& synth_in, Rng& rng,
                             const MetricsConfig& config) {
  require_same_schema(real_in, synth_in, "propensity_similarity");
  if (real_in.row_count() == 0 || synth_in.row_count() == 0) {
    throw Error(kModule, "propensity_similarity", "empty tables");
  }
  auto [real, synth] = align_rows(real_in, synth_in, rng);

  // Stack, label (real 0 / synthetic 1), shuffle, 80/20 split.
  const int64_t n = real.row_count();
  Table stacked;
  stacked.schema = real.schema;
  stacked.cells = Matrix(2 * n, real.column_count());
  std::vector<int64_t> labels(static_cast<size_t>(2 * n));
  for (int64_t r = 0; r < n; ++r) {
    for (int64_t c = 0; c < real.column_count(); ++c) {
      stacked.cells.at(r, c) = real.cells.at(r, c);
      stacked.cells.at(n + r, c) = synth.cells.at(r, c);
    }
    labels[static_cast<size_t>(r)] = 0;
    labels[static_cast<size_t>(n + r)] = 1;
  }
  auto order = rng.permutation(2 * n);
  const int64_t train_n = std::max<int64_t>(1, (2 * n * 8) / 10);
  std::vector<int64_t> train_rows(order.begin(), order.begin() + train_n);
  std::vector<int64_t> test_rows(order.begin() + train_n, order.end());
  if (test_rows.empty()) throw Error(kModule, "propensity_similarity", "holdout is empty");

  const Table train = stacked.gather(train_rows);
  const Table test = stacked.gather(test_rows);
  std::vector<int64_t> train_labels;
  for (int64_t r : train_rows) train_labels.push_back(labels[static_cast<size_t>(r)]);

  const Learner classifier =
      train_learner(train, Matrix(), train_labels, true, 2, config, rng,
                    config.propensity_epochs, config.propensity_weight_decay);
  const Matrix probs = classifier.predict_proba(test);
  double pmae = 0.0;
  for (int64_t r = 0; r < probs.rows(); ++r) {
    pmae += std::abs(probs.at(r, 1) - 0.5) * 2.0;
  }
  pmae /= static_cast<double>(probs.rows());
  return (1.0 - pmae) * 100.0;
}

double utility_score(const Table& real_train, const Table& synth, const Table& real_holdout,
                     Rng& rng, const MetricsConfig& config) {
  require_same_schema(real_train, synth, "utility_score");
  require_same_schema(real_train, real_holdout, "utility_score");
  const int64_t d = real_train.column_count();
  if (d < 2) throw Error(kModule, "utility_score", "need at least two columns");

  std::vector<double> real_metrics, synth_metrics;
  for (int64_t target = 0; target < d; ++target) {
    std::vector<int64_t> feature_cols;
    for (int64_t c = 0; c < d; ++c) {
      if (c != target) feature_cols.push_back(c);
    }
    const auto& target_col = real_train.schema.at(target);
    const Table holdout_features = real_holdout.select_columns(feature_cols);
    const auto holdout_target = real_holdout.column(target);

    // Both sides share the seed so identical training data trains identical
    // learners.
    const uint64_t target_seed = rng.next_u64();
    auto evaluate_side = [&](const Table& side) {
      Rng side_rng(target_seed);
      const Table features = side.select_columns(feature_cols);
      if (target_col.is_categorical()) {
        const auto labels = to_labels(side.column(target));
        const Learner learner =
            train_classifier(features, labels, target_col.cardinality(), config, side_rng);
        const auto predicted = learner.predict_class(holdout_features);
        return macro_f1(to_labels(holdout_target), predicted, target_col.cardinality());
      }
      const auto targets = side.column(target);
      const Learner learner = train_regressor(features, targets, config, side_rng);
      const auto predicted = learner.predict_value(holdout_features);
      return d2_absolute_error(holdout_target, predicted);
    };
    real_metrics.push_back(evaluate_side(real_train));
    synth_metrics.push_back(evaluate_side(synth));
  }

  const double real_agg = percentile(real_metrics, 0.9);
  const double synth_agg = percentile(synth_metrics, 0.9);
  if (real_agg <= 0.0) throw Error(kModule, "utility_score", "degenerate real baseline");
  return std::min(100.0, 100.0 * synth_agg / real_agg);
}

ScoreReport resemblance(const Table& real, const Table& synth, Rng& rng,
                        const MetricsConfig& config) {
  ScoreReport report;
  Rng r1(rng.next_u64()), r2(rng.next_u64()), r3(rng.next_u64()), r4(rng.next_u64()),
      r5(rng.next_u64());
  report.column_similarity = column_similarity(real, synth, r1);
  report.correlation_similarity = correlation_similarity(real, synth, r2, config);
  report.js_similarity = js_similarity(real, synth, r3, config);
  report.ks_similarity = ks_similarity(real, synth, r4);
  report.propensity_similarity = propensity_similarity(real, synth, r5, config);
  report.resemblance =
      (report.column_similarity + report.correlation_similarity + report.js_similarity +
       report.ks_similarity + report.propensity_similarity) /
      5.0;
  return report;
}

std::string ScoreReport::to_json() const {
  nlohmann::json j;
  j["column_similarity"] = column_similarity;
  j["correlation_similarity"] = correlation_similarity;
  j["js_similarity"] = js_similarity;
  j["ks_similarity"] = ks_similarity;
  j["propensity_similarity"] = propensity_similarity;
  j["resemblance"] = resemblance;
  if (utility.has_value()) j["utility"] = *utility;
  j["dataset"] = dataset;
  j["model"] = model;
  j["seed"] = seed;
  j["trials"] = trials;
  return j.dump(2);
}

std::string ScoreReport::csv_header() {
  return "dataset,model,seed,trials,column_similarity,correlation_similarity,js_similarity,"
         "ks_similarity,propensity_similarity,resemblance,utility";
}

std::string ScoreReport::csv_row() const {
  std::ostringstream out;
  out << dataset << ',' << model << ',' << seed << ',' << trials << ',' << column_similarity
      << ',' << correlation_similarity << ',' << js_similarity << ',' << ks_similarity << ','
      << propensity_similarity << ',' << resemblance << ',';
  if (utility.has_value()) out << *utility;
  return out.str();
}

void write_histograms(const Table& real, const Table& synth, const std::string& directory,
                      int64_t bins) {
  require_same_schema(real, synth, "write_histograms");
  std::filesystem::create_directories(directory);
  for (int64_t c = 0; c < real.column_count(); ++c) {
    const auto& col = real.schema.at(c);
    std::ofstream out(std::filesystem::path(directory) /
                      ("column_" + std::to_string(c) + "_" + col.name + ".csv"));
    if (!out) throw Error(kModule, "write_histograms", "cannot write histogram for " + col.name);
    if (col.is_categorical()) {
      out << "category,real_count,synth_count\n";
      std::vector<int64_t> rc(static_cast<size_t>(col.cardinality()), 0);
      std::vector<int64_t> sc(static_cast<size_t>(col.cardinality()), 0);
      for (double v : real.column(c)) rc[static_cast<size_t>(v)]++;
      for (double v : synth.column(c)) sc[static_cast<size_t>(v)]++;
      for (int64_t k = 0; k < col.cardinality(); ++k) {
        out << col.categories[static_cast<size_t>(k)] << ',' << rc[static_cast<size_t>(k)] << ','
            << sc[static_cast<size_t>(k)] << '\n';
      }
    } else {
      out << "bin_lo,bin_hi,real_count,synth_count\n";
      const auto rv = real.column(c);
      const auto sv = synth.column(c);
      double lo = rv.empty() ? 0.0 : rv.front(), hi = lo;
      for (double v : rv) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      for (double v : sv) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
      std::vector<int64_t> rc(static_cast<size_t>(bins), 0);
      std::vector<int64_t> sc(static_cast<size_t>(bins), 0);
      auto bin_of = [&](double v) {
        const auto b = hi > lo ? static_cast<int64_t>((v - lo) / (hi - lo) *
                                                      static_cast<double>(bins))
                               : 0;
        return std::clamp<int64_t>(b, 0, bins - 1);
      };
      for (double v : rv) rc[static_cast<size_t>(bin_of(v))]++;
      for (double v : sv) sc[static_cast<size_t>(bin_of(v))]++;
      for (int64_t b = 0; b < bins; ++b) {
        out << (lo + width * static_cast<double>(b)) << ','
            << (lo + width * static_cast<double>(b + 1)) << ',' << rc[static_cast<size_t>(b)]
            << ',' << sc[static_cast<size_t>(b)] << '\n';
      }
    }
  }
}

}  // namespace silofuse
