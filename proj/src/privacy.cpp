#include "silofuse/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "silofuse/error.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "privacy-attacks";

void require_attack_inputs(const Table& real_train, const Table& control, const Table& synth,
                           const char* op) {
  if (real_train.schema != synth.schema) {
    throw Error(kModule, op, "train and synthetic schemas differ");
  }
  if (control.row_count() == 0) throw Error(kModule, op, "control set unavailable");
  if (control.schema != real_train.schema) {
    throw Error(kModule, op, "control schema differs");
  }
}

std::vector<int64_t> pick_targets(const Table& table, int64_t n_targets, Rng& rng) {
  const int64_t n = std::min<int64_t>(n_targets, table.row_count());
  return rng.sample_without_replacement(table.row_count(), n);
}

}  // namespace

AttackResult make_attack_result(std::string attack, double main_rate, double control_rate,
                                int64_t trials) {
  AttackResult result;
  result.attack = std::move(attack);
  result.main_rate = main_rate;
  result.control_rate = control_rate;
  const double headroom = 1.0 - control_rate;
  result.risk = (main_rate <= control_rate || headroom <= 0.0)
                    ? 0.0
                    : (main_rate - control_rate) / headroom;
  result.risk = std::clamp(result.risk, 0.0, 1.0);
  result.score = (1.0 - result.risk) * 100.0;
  result.trials = trials;
  return result;
}

std::string AttackResult::to_json() const {
  nlohmann::json j;
  j["attack"] = attack;
  j["main_rate"] = main_rate;
  j["control_rate"] = control_rate;
  j["risk"] = risk;
  j["score"] = score;
  j["trials"] = trials;
  return j.dump(2);
}

GowerMetric::GowerMetric(const Table& corpus, const Table& queries, std::vector<int64_t> columns)
    : schema_(corpus.schema), columns_(std::move(columns)) {
  if (columns_.empty()) throw Error(kModule, "gower", "no columns selected");
  for (int64_t c : columns_) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    if (!schema_.at(c).is_categorical()) {
      for (const Table* t : {&corpus, &queries}) {
        for (int64_t r = 0; r < t->row_count(); ++r) {
          const double v = t->cells.at(r, c);
          if (first) {
            lo = hi = v;
            first = false;
          } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
      }
    }
    ranges_.push_back(schema_.at(c).is_categorical() ? 0.0 : hi - lo);
  }
}

double GowerMetric::distance(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  for (size_t i = 0; i < columns_.size(); ++i) {
    const int64_t c = columns_[i];
    if (schema_.at(c).is_categorical()) {
      acc += a[static_cast<size_t>(c)] == b[static_cast<size_t>(c)] ? 0.0 : 1.0;
    } else {
      const double range = ranges_[i];
      if (range > 0.0) {
        acc += std::min(1.0, std::abs(a[static_cast<size_t>(c)] - b[static_cast<size_t>(c)]) /
                                 range);
      } else if (a[static_cast<size_t>(c)] != b[static_cast<size_t>(c)]) {
        acc += 1.0;
      }
    }
  }
  return acc / static_cast<double>(columns_.size());
}

std::vector<int64_t> GowerMetric::nearest(const Table& corpus, std::span<const double> query,
                                          int64_t k) const {
  if (k > corpus.row_count()) {
    throw Error(kModule, "gower", "k exceeds corpus size");
  }
  // (distance, index) pairs kept sorted; strict comparison keeps the lowest
  // index on ties.
  std::vector<std::pair<double, int64_t>> best;
  best.reserve(static_cast<size_t>(k) + 1);
  for (int64_t r = 0; r < corpus.row_count(); ++r) {
    const double d = distance(query, corpus.cells.row(r));
    const std::pair<double, int64_t> cand{d, r};
    if (static_cast<int64_t>(best.size()) < k || cand < best.back()) {
      best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      if (static_cast<int64_t>(best.size()) > k) best.pop_back();
    }
  }
  std::vector<int64_t> out;
  for (const auto& [d, idx] : best) out.push_back(idx);
  return out;
}

// --- singling out ---------------------------------------------------------------

namespace {

struct Condition {
  enum class Op { Le, Ge, Eq };
  int64_t column = 0;
  Op op = Op::Eq;
  double value = 0.0;
};
using Predicate = std::vector<Condition>;

bool matches(const Table& table, int64_t row, const Predicate& predicate) {
  for (const auto& cond : predicate) {
    const double v = table.cells.at(row, cond.column);
    switch (cond.op) {
      case Condition::Op::Le:
        if (!(v <= cond.value)) return false;
        break;
      case Condition::Op::Ge:
        if (!(v >= cond.value)) return false;
        break;
      case Condition::Op::Eq:
        if (v != cond.value) return false;
        break;
    }
  }
  return true;
}

int64_t match_count(const Table& table, const Predicate& predicate) {
  int64_t count = 0;
  for (int64_t r = 0; r < table.row_count(); ++r) count += matches(table, r, predicate);
  return count;
}

// Univariate predicates probe extreme synthetic values: column minima and
// maxima for continuous columns, rare categories for categorical ones.
std::vector<Predicate> univariate_pool(const Table& synth, const AttackParams& params) {
  std::vector<Predicate> pool;
  for (int64_t c = 0; c < synth.column_count(); ++c) {
    const auto& col = synth.schema.at(c);
    if (col.is_categorical()) {
      std::vector<int64_t> counts(static_cast<size_t>(col.cardinality()), 0);
      for (double v : synth.column(c)) counts[static_cast<size_t>(v)]++;
      for (int64_t k = 0; k < col.cardinality(); ++k) {
        const double freq = static_cast<double>(counts[static_cast<size_t>(k)]) /
                            static_cast<double>(synth.row_count());
        if (freq > 0.0 && freq < params.rare_category_max_freq) {
          pool.push_back({{c, Condition::Op::Eq, static_cast<double>(k)}});
        }
      }
    } else {
      const auto values = synth.column(c);
      double lo = values.front(), hi = values.front();
      for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      pool.push_back({{c, Condition::Op::Le, lo}});
      pool.push_back({{c, Condition::Op::Ge, hi}});
    }
  }
  return pool;
}

Predicate multivariate_predicate(const Table& synth, const std::vector<double>& medians,
                                 Rng& rng) {
  const int64_t d = synth.column_count();
  const int64_t row = rng.uniform_int(0, synth.row_count() - 1);
  const int64_t width = rng.uniform_int(2, std::min<int64_t>(d, 4));
  auto cols = rng.sample_without_replacement(d, width);
  Predicate predicate;
  for (int64_t c : cols) {
    const double v = synth.cells.at(row, c);
    if (synth.schema.at(c).is_categorical()) {
      predicate.push_back({c, Condition::Op::Eq, v});
    } else {
      predicate.push_back({c, v <= medians[static_cast<size_t>(c)] ? Condition::Op::Le
                                                                   : Condition::Op::Ge,
                           v});
    }
  }
  return predicate;
}

}  // namespace

AttackResult singling_out(const Table& real_train, const Table& control, const Table& synth,
                          int64_t n_predicates, Rng& rng, const AttackParams& params) {
  require_attack_inputs(real_train, control, synth, "singling_out");
  if (n_predicates == 0) return make_attack_result("singling_out", 0.0, 0.0, 0);
  if (synth.row_count() == 0) throw Error(kModule, "singling_out", "synthetic table empty");

  std::vector<double> medians;
  for (int64_t c = 0; c < synth.column_count(); ++c) {
    auto values = synth.column(c);
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    medians.push_back(n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]));
  }

  const auto pool = univariate_pool(synth, params);
  std::vector<Predicate> predicates;
  predicates.reserve(static_cast<size_t>(n_predicates));
  for (int64_t i = 0; i < n_predicates; ++i) {
    // Alternate single-column probes (cycled) with multi-column conjunctions.
    if (!pool.empty() && i % 2 == 0) {
      predicates.push_back(pool[static_cast<size_t>(i / 2) % pool.size()]);
    } else {
      predicates.push_back(multivariate_predicate(synth, medians, rng));
    }
  }

  int64_t main_hits = 0, control_hits = 0;
  for (const auto& predicate : predicates) {
    main_hits += match_count(real_train, predicate) == 1;
    control_hits += match_count(control, predicate) == 1;
  }
  const double n = static_cast<double>(predicates.size());
  return make_attack_result("singling_out", static_cast<double>(main_hits) / n,
                            static_cast<double>(control_hits) / n, n_predicates);
}

// --- linkability -----------------------------------------------------------------

namespace {

double linkability_rate(const Table& targets, const std::vector<int64_t>& target_rows,
                        const Table& synth, const GowerMetric& metric_a,
                        const GowerMetric& metric_b, int64_t k) {
  if (target_rows.empty()) return 0.0;
  int64_t hits = 0;
  for (int64_t row : target_rows) {
    const auto query = targets.cells.row(row);
    const auto nn_a = metric_a.nearest(synth, query, k);
    const auto nn_b = metric_b.nearest(synth, query, k);
    bool intersects = false;
    for (int64_t a : nn_a) {
      if (std::find(nn_b.begin(), nn_b.end(), a) != nn_b.end()) {
        intersects = true;
        break;
      }
    }
    hits += intersects;
  }
  return static_cast<double>(hits) / static_cast<double>(target_rows.size());
}

}  // namespace

AttackResult linkability(const Table& real_train, const Table& control, const Table& synth,
                         const std::vector<int64_t>& columns_a,
                         const std::vector<int64_t>& columns_b, int64_t n_targets,
                         int64_t neighbors, Rng& rng) {
  require_attack_inputs(real_train, control, synth, "linkability");
  if (columns_a.empty() || columns_b.empty()) {
    throw Error(kModule, "linkability", "both column sets must be nonempty");
  }
  for (int64_t a : columns_a) {
    if (std::find(columns_b.begin(), columns_b.end(), a) != columns_b.end()) {
      throw Error(kModule, "linkability", "column sets must be disjoint");
    }
  }
  if (neighbors > synth.row_count()) {
    throw Error(kModule, "linkability", "k exceeds synthetic row count");
  }

  const auto main_rows = pick_targets(real_train, n_targets, rng);
  const auto control_rows = pick_targets(control, n_targets, rng);

  const GowerMetric main_a(synth, real_train, columns_a);
  const GowerMetric main_b(synth, real_train, columns_b);
  const GowerMetric control_a(synth, control, columns_a);
  const GowerMetric control_b(synth, control, columns_b);

  const double main_rate =
      linkability_rate(real_train, main_rows, synth, main_a, main_b, neighbors);
  const double control_rate =
      linkability_rate(control, control_rows, synth, control_a, control_b, neighbors);
  return make_attack_result("linkability", main_rate, control_rate,
                            static_cast<int64_t>(main_rows.size()));
}

// --- attribute inference -----------------------------------------------------------

AttackResult attribute_inference(const Table& real_train, const Table& control,
                                 const Table& synth, const std::vector<int64_t>& known_columns,
                                 int64_t secret_column, int64_t n_targets, Rng& rng,
                                 const AttackParams& params) {
  require_attack_inputs(real_train, control, synth, "attribute_inference");
  if (known_columns.empty()) throw Error(kModule, "attribute_inference", "no known columns");
  if (std::find(known_columns.begin(), known_columns.end(), secret_column) !=
      known_columns.end()) {
    throw Error(kModule, "attribute_inference", "secret column cannot be known");
  }
  if (synth.row_count() == 0) {
    throw Error(kModule, "attribute_inference", "synthetic table empty");
  }
  const auto& secret = real_train.schema.at(secret_column);

  // Success margin for continuous secrets: a fraction of the training range.
  double secret_range = 0.0;
  if (!secret.is_categorical()) {
    const auto values = real_train.column(secret_column);
    double lo = values.front(), hi = values.front();
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    secret_range = hi - lo;
  }
  const double tolerance = params.continuous_tolerance * secret_range;

  // Marginal baseline: synthetic mode (categorical) or median (continuous).
  double baseline_prediction = 0.0;
  {
    auto values = synth.column(secret_column);
    if (secret.is_categorical()) {
      std::vector<int64_t> counts(static_cast<size_t>(secret.cardinality()), 0);
      for (double v : values) counts[static_cast<size_t>(v)]++;
      baseline_prediction = static_cast<double>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
    } else {
      std::sort(values.begin(), values.end());
      const size_t n = values.size();
      baseline_prediction =
          n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
  }

  auto success = [&](double predicted, double truth) {
    if (secret.is_categorical()) return predicted == truth;
    return std::abs(predicted - truth) <= tolerance;
  };

  const auto target_rows = pick_targets(real_train, n_targets, rng);
  if (target_rows.empty()) return make_attack_result("attribute_inference", 0.0, 0.0, 0);
  const GowerMetric metric(synth, real_train, known_columns);
  int64_t main_hits = 0, control_hits = 0;
  for (int64_t row : target_rows) {
    const double truth = real_train.cells.at(row, secret_column);
    const auto nn = metric.nearest(synth, real_train.cells.row(row), 1);
    const double predicted = synth.cells.at(nn.front(), secret_column);
    main_hits += success(predicted, truth);
    control_hits += success(baseline_prediction, truth);
  }
  const double n = static_cast<double>(target_rows.size());
  return make_attack_result("attribute_inference", static_cast<double>(main_hits) / n,
                            static_cast<double>(control_hits) / n,
                            static_cast<int64_t>(target_rows.size()));
}

double privacy_score(const std::vector<AttackResult>& results) {
  bool has_singling = false, has_link = false, has_inference = false;
  double total = 0.0;
  for (const auto& r : results) {
    if (r.attack == "singling_out") has_singling = true;
    if (r.attack == "linkability") has_link = true;
    if (r.attack == "attribute_inference") has_inference = true;
    total += r.score;
  }
  if (results.size() != 3 || !has_singling || !has_link || !has_inference) {
    throw Error(kModule, "privacy_score", "need exactly one result per attack kind");
  }
  return total / 3.0;
}

std::string PrivacySuiteResult::to_json() const {
  nlohmann::json j;
  j["singling_out"] = nlohmann::json::parse(singling_out.to_json());
  j["linkability"] = nlohmann::json::parse(linkability.to_json());
  j["attribute_inference"] = nlohmann::json::parse(attribute_inference.to_json());
  j["privacy_score"] = score;
  return j.dump(2);
}

PrivacySuiteResult run_privacy_suite(const Table& real_train, const Table& control,
                                     const Table& synth, const AttackParams& params, Rng& rng) {
  const int64_t d = real_train.column_count();
  if (d < 2) throw Error(kModule, "run_privacy_suite", "need at least two columns");
  // Interleaved split so both projections usually carry continuous columns;
  // an all-categorical side would make the nearest-neighbor sets degenerate.
  std::vector<int64_t> columns_a, columns_b;
  for (int64_t c = 0; c < d; ++c) {
    (c % 2 == 0 ? columns_a : columns_b).push_back(c);
  }
  // Attribute inference: the last column is the secret, all others known.
  std::vector<int64_t> known;
  for (int64_t c = 0; c < d - 1; ++c) known.push_back(c);

  PrivacySuiteResult result;
  Rng r1(rng.next_u64()), r2(rng.next_u64()), r3(rng.next_u64());
  result.singling_out = singling_out(real_train, control, synth, params.n_predicates, r1, params);
  result.linkability = linkability(real_train, control, synth, columns_a, columns_b,
                                   params.n_targets, params.neighbors, r2);
  result.attribute_inference = attribute_inference(real_train, control, synth, known, d - 1,
                                                   params.n_targets, r3, params);
  result.score =
      privacy_score({result.singling_out, result.linkability, result.attribute_inference});
  return result;
}

}  // namespace silofuse
