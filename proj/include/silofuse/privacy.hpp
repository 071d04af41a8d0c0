#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "silofuse/rng.hpp"
#include "silofuse/table.hpp"

namespace silofuse {

struct AttackParams {
  int64_t n_predicates = 500;
  int64_t n_targets = 500;
  int64_t neighbors = 5;  // k
  // A category counts as "rare" for predicate generation below this
  // synthetic relative frequency.
  double rare_category_max_freq = 0.05;
  // Attribute-inference success margin for continuous secrets, as a
  // fraction of the secret column's range.
  double continuous_tolerance = 0.05;
};

struct AttackResult {
  std::string attack;
  double main_rate = 0.0;     // success against the training set
  double control_rate = 0.0;  // success against the disjoint control set
  double risk = 0.0;          // max(0, (main - control) / (1 - control))
  double score = 100.0;       // (1 - risk) * 100
  int64_t trials = 0;

  std::string to_json() const;
};

AttackResult make_attack_result(std::string attack, double main_rate, double control_rate,
                                int64_t trials);

// Range-normalized L1 for continuous columns, 0/1 mismatch for categorical,
// averaged over the selected columns. Ranges come from the search corpus
// plus queries at construction.
class GowerMetric {
 public:
  GowerMetric(const Table& corpus, const Table& queries, std::vector<int64_t> columns);

  double distance(std::span<const double> a, std::span<const double> b) const;
  // k nearest corpus rows to the query row; ties resolved by lowest index.
  std::vector<int64_t> nearest(const Table& corpus, std::span<const double> query,
                               int64_t k) const;

 private:
  Schema schema_;
  std::vector<int64_t> columns_;
  std::vector<double> ranges_;  // per selected column, 0 for categorical
};

// Predicates built from extreme/rare synthetic values; main success is the
// fraction matching exactly one training record, control the same against
// the control set.
AttackResult singling_out(const Table& real_train, const Table& control, const Table& synth,
                          int64_t n_predicates, Rng& rng, const AttackParams& params = {});

// For each target, the k nearest synthetic neighbors of its A-projection and
// of its B-projection; success when the neighbor sets intersect.
AttackResult linkability(const Table& real_train, const Table& control, const Table& synth,
                         const std::vector<int64_t>& columns_a,
                         const std::vector<int64_t>& columns_b, int64_t n_targets,
                         int64_t neighbors, Rng& rng);

// Nearest synthetic record on the known columns predicts the secret; the
// control baseline predicts the synthetic marginal mode/median instead.
AttackResult attribute_inference(const Table& real_train, const Table& control,
                                 const Table& synth, const std::vector<int64_t>& known_columns,
                                 int64_t secret_column, int64_t n_targets, Rng& rng,
                                 const AttackParams& params = {});

// Arithmetic mean of the three attack scores; requires one result per kind.
double privacy_score(const std::vector<AttackResult>& results);

struct PrivacySuiteResult {
  AttackResult singling_out;
  AttackResult linkability;
  AttackResult attribute_inference;
  double score = 0.0;

  std::string to_json() const;
};

// Runs all three attacks with derived seeds; the column split and secret
// default to halves of the schema and its last column.
PrivacySuiteResult run_privacy_suite(const Table& real_train, const Table& control,
                                     const Table& synth, const AttackParams& params, Rng& rng);

}  // namespace silofuse
