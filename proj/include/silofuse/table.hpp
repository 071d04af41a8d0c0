#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "silofuse/matrix.hpp"
#include "silofuse/rng.hpp"

namespace silofuse {

enum class ColumnKind { Continuous, Categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  // Declaration-order category labels; index of a label is its cell value.
  std::vector<std::string> categories;

  bool is_categorical() const { return kind == ColumnKind::Categorical; }
  int64_t cardinality() const { return static_cast<int64_t>(categories.size()); }

  static ColumnSpec continuous(std::string name) {
    return {std::move(name), ColumnKind::Continuous, {}};
  }
  static ColumnSpec categorical(std::string name, std::vector<std::string> categories) {
    return {std::move(name), ColumnKind::Categorical, std::move(categories)};
  }

  bool operator==(const ColumnSpec&) const = default;
};

struct Schema {
  std::vector<ColumnSpec> columns;

  int64_t width() const { return static_cast<int64_t>(columns.size()); }
  const ColumnSpec& at(int64_t i) const { return columns[static_cast<size_t>(i)]; }
  int64_t index_of(const std::string& name) const;  // -1 when absent
  // Checks name uniqueness and categorical cardinality >= 2.
  void validate() const;

  bool operator==(const Schema&) const = default;
};

/// Aligned-row mixed-type dataset. Continuous cells hold finite reals;
/// categorical cells hold class indices in [0, cardinality) stored as
/// doubles. Immutable in spirit: build once, then read.
struct Table {
  Schema schema;
  Matrix cells;  // n x d

  int64_t row_count() const { return cells.rows(); }
  int64_t column_count() const { return schema.width(); }

  void validate() const;
  std::vector<double> column(int64_t i) const;
  Table select_columns(const std::vector<int64_t>& indices) const;
  Table head(int64_t n) const;
  Table tail(int64_t n) const;
  Table gather(std::span<const int64_t> row_indices) const;
};

/// Column assignment of a d-wide schema onto M clients; blocks are disjoint
/// and cover every column.
struct VerticalPartition {
  int64_t client_count = 0;
  std::vector<std::vector<int64_t>> assignment;  // per client, original column indices

  int64_t block_width(int64_t client) const {
    return static_cast<int64_t>(assignment[static_cast<size_t>(client)].size());
  }
  void validate(int64_t total_columns) const;
};

// Contiguous equal split of d columns (after the optional permutation) into
// M blocks; the remainder goes to the last client.
VerticalPartition partition_equal(int64_t d, int64_t clients,
                                  const std::vector<int64_t>* permutation = nullptr);

// Column permutation used by the robustness experiment: Fisher-Yates with a
// dedicated seeded stream.
std::vector<int64_t> seeded_column_permutation(int64_t d, uint64_t seed);

// Sum over columns of (1 for continuous, cardinality for categorical).
int64_t one_hot_width(const Schema& schema);

/// Per-continuous-column standardization fitted on training rows. Degenerate
/// (zero variance) columns record std = 1 so the transform is a pure shift.
struct Normalizer {
  std::vector<double> means;    // 0 for categorical slots
  std::vector<double> stddevs;  // 1 for categorical slots

  Table apply(const Table& table) const;
  Table invert(const Table& table) const;
  // Standardize / de-standardize one continuous column value.
  double apply_cell(int64_t column, double value) const {
    return (value - means[static_cast<size_t>(column)]) / stddevs[static_cast<size_t>(column)];
  }
  double invert_cell(int64_t column, double value) const {
    return value * stddevs[static_cast<size_t>(column)] + means[static_cast<size_t>(column)];
  }
};

Normalizer fit_normalizer(const Table& table);

// --- file formats -----------------------------------------------------------
//
// Schema file: one column per line, "name kind [categories...]".
// CSV: header row, comma separated, UTF-8, continuous cells at 6 significant
// digits. Emission is bit-stable so ingest -> emit -> ingest is idempotent.

Schema read_schema_file(const std::string& path);
void write_schema_file(const Schema& schema, const std::string& path);
Schema parse_schema_text(std::istream& in);

Table ingest_csv(const std::string& path, const Schema& schema);
Table parse_csv(std::istream& in, const Schema& schema);
void emit_csv(const Table& table, const std::string& path);
std::string emit_csv_string(const Table& table);

// Column-wise concatenation honoring each block's original column indices;
// the inverse of splitting a table along a VerticalPartition.
Table merge_partitioned(const std::vector<Table>& blocks, const VerticalPartition& partition,
                        const Schema& original_schema);

// Rows subsampled without replacement down to `target_rows` (seeded); the
// identity when the table is already small enough.
Table subsample_rows(const Table& table, int64_t target_rows, Rng& rng);

}  // namespace silofuse
