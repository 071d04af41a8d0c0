#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "silofuse/rng.hpp"
#include "silofuse/table.hpp"

namespace silofuse {

struct MetricsConfig {
  int64_t histogram_bins = 50;   // Jensen-Shannon continuous binning
  int64_t decile_bins = 10;      // continuous discretization for associations
  int64_t learner_hidden = 128;  // propensity / downstream MLP width (2 layers)
  int64_t learner_epochs = 60;
  int64_t learner_batch = 256;
  double learner_lr = 1e-3;
  // Propensity-only settings: the real-vs-synthetic classifier needs L2
  // decay so indistinguishable data keeps its probabilities at 1/2 instead
  // of memorizing sampling noise.
  int64_t propensity_epochs = 20;
  double propensity_weight_decay = 0.05;
};

struct ScoreReport {
  double column_similarity = 0.0;
  double correlation_similarity = 0.0;
  double js_similarity = 0.0;
  double ks_similarity = 0.0;
  double propensity_similarity = 0.0;
  double resemblance = 0.0;  // arithmetic mean of the five sub-scores
  std::optional<double> utility;

  std::string dataset;
  std::string model;
  uint64_t seed = 0;
  int64_t trials = 1;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// All scores live in [0, 100] with 100 best. Every metric first equalizes
// row counts by seeded uniform subsampling of the larger table and throws
// on schema mismatch.

// Per-column agreement of marginals: Pearson correlation of the paired order
// statistics for continuous columns, (1 - Theil's U of category given
// source) for categorical ones.
double column_similarity(const Table& real, const Table& synth, Rng& rng);

// Agreement of the pairwise association matrices (Pearson for
// continuous-continuous, Theil's U with decile-discretized continuous sides
// otherwise): (1 - mean absolute entry difference) * 100, floored at 0.
double correlation_similarity(const Table& real, const Table& synth, Rng& rng,
                              const MetricsConfig& config = {});

// One minus the mean per-column base-2 Jensen-Shannon distance, scaled.
double js_similarity(const Table& real, const Table& synth, Rng& rng,
                     const MetricsConfig& config = {});

// One minus the mean Kolmogorov-Smirnov statistic (continuous) or total
// variation distance (categorical), scaled.
double ks_similarity(const Table& real, const Table& synth, Rng& rng);

// Real-vs-synthetic classifier two-sidedness: (1 - pMAE) * 100 where pMAE is
// the doubled mean absolute deviation of held-out probabilities from 1/2.
double propensity_similarity(const Table& real, const Table& synth, Rng& rng,
                             const MetricsConfig& config = {});

// Downstream train-on-synthetic / train-on-real performance ratio, evaluated
// per target column on the same real holdout; 90th-percentile aggregate,
// clipped at 100.
double utility_score(const Table& real_train, const Table& synth, const Table& real_holdout,
                     Rng& rng, const MetricsConfig& config = {});

ScoreReport resemblance(const Table& real, const Table& synth, Rng& rng,
                        const MetricsConfig& config = {});

// --- shared statistical helpers (used by tests and attacks too) --------------

double pearson_correlation(std::span<const double> x, std::span<const double> y);
// Uncertainty coefficient U(x|y) from paired label sequences.
double theils_u(std::span<const int64_t> x, std::span<const int64_t> y, int64_t x_cardinality,
                int64_t y_cardinality);
double ks_statistic(std::span<const double> a, std::span<const double> b);
double total_variation(std::span<const double> p, std::span<const double> q);
// Base-2 Jensen-Shannon distance (square root of the divergence).
double jensen_shannon_distance(std::span<const double> p, std::span<const double> q);
// Macro-averaged F1 over `cardinality` classes; 0/0 classes count as 0.
double macro_f1(std::span<const int64_t> truth, std::span<const int64_t> predicted,
                int64_t cardinality);
// D2 absolute-error score: 1 - MAE / MAE(median predictor), floored at 0.
double d2_absolute_error(std::span<const double> truth, std::span<const double> predicted);
double percentile(std::vector<double> values, double q);  // linear interpolation

// --- learner facade -----------------------------------------------------------

/// Deterministic MLP classifier/regressor (2 hidden GELU layers) shared by
/// the propensity metric and the downstream utility evaluation.
struct Learner {
  Schema feature_schema;
  Normalizer normalizer;
  struct LearnerModel;  // opaque; holds the trained net
  std::shared_ptr<const LearnerModel> model;

  // Class probabilities (classification) for each row.
  Matrix predict_proba(const Table& features) const;
  std::vector<int64_t> predict_class(const Table& features) const;
  std::vector<double> predict_value(const Table& features) const;  // regression
};

Learner train_classifier(const Table& features, std::span<const int64_t> labels,
                         int64_t cardinality, const MetricsConfig& config, Rng& rng);
Learner train_regressor(const Table& features, std::span<const double> targets,
                        const MetricsConfig& config, Rng& rng);

// --- histogram export -----------------------------------------------------------

// One CSV per column under `directory`: bin edges (or category labels) with
// real/synthetic counts; the data behind feature-distribution plots.
void write_histograms(const Table& real, const Table& synth, const std::string& directory,
                      int64_t bins = 50);

}  // namespace silofuse
