#include "silofuse/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "silofuse/error.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "tabular-core";

std::string format_continuous(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

int64_t Schema::index_of(const std::string& name) const {
  for (int64_t i = 0; i < width(); ++i) {
    if (columns[static_cast<size_t>(i)].name == name) return i;
  }
  return -1;
}

void Schema::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& col : columns) {
    if (col.name.empty()) throw Error(kModule, "schema", "empty column name");
    if (!seen.insert(col.name).second) {
      throw Error(kModule, "schema", "duplicate column name '" + col.name + "'");
    }
    if (col.is_categorical()) {
      if (col.cardinality() < 2) {
        throw Error(kModule, "schema",
                    "categorical column '" + col.name + "' needs cardinality >= 2");
      }
      std::unordered_set<std::string> cats(col.categories.begin(), col.categories.end());
      if (static_cast<int64_t>(cats.size()) != col.cardinality()) {
        throw Error(kModule, "schema", "duplicate category in column '" + col.name + "'");
      }
    }
  }
}

void Table::validate() const {
  schema.validate();
  if (cells.cols() != schema.width()) {
    throw Error(kModule, "table", "cell width does not match schema");
  }
  for (int64_t r = 0; r < cells.rows(); ++r) {
    auto row = cells.row(r);
    for (int64_t c = 0; c < cells.cols(); ++c) {
      const auto& col = schema.at(c);
      const double v = row[c];
      if (!std::isfinite(v)) {
        throw Error(kModule, "table",
                    "non-finite cell at row " + std::to_string(r) + ", column '" + col.name + "'");
      }
      if (col.is_categorical()) {
        if (v != std::floor(v) || v < 0 || v >= static_cast<double>(col.cardinality())) {
          throw Error(kModule, "table",
                      "categorical index out of range at row " + std::to_string(r) +
                          ", column '" + col.name + "'");
        }
      }
    }
  }
}

std::vector<double> Table::column(int64_t i) const {
  std::vector<double> out(static_cast<size_t>(row_count()));
  for (int64_t r = 0; r < row_count(); ++r) out[static_cast<size_t>(r)] = cells.at(r, i);
  return out;
}

Table Table::select_columns(const std::vector<int64_t>& indices) const {
  Table out;
  for (int64_t i : indices) out.schema.columns.push_back(schema.at(i));
  out.cells = Matrix(row_count(), static_cast<int64_t>(indices.size()));
  for (int64_t r = 0; r < row_count(); ++r) {
    for (size_t j = 0; j < indices.size(); ++j) {
      out.cells.at(r, static_cast<int64_t>(j)) = cells.at(r, indices[j]);
    }
  }
  return out;
}

Table Table::head(int64_t n) const {
  std::vector<int64_t> idx;
  for (int64_t r = 0; r < std::min(n, row_count()); ++r) idx.push_back(r);
  return gather(idx);
}

Table Table::tail(int64_t n) const {
  std::vector<int64_t> idx;
  for (int64_t r = std::max<int64_t>(0, row_count() - n); r < row_count(); ++r) idx.push_back(r);
  return gather(idx);
}

Table Table::gather(std::span<const int64_t> row_indices) const {
  Table out;
  out.schema = schema;
  out.cells = gather_rows(cells, row_indices);
  return out;
}

void VerticalPartition::validate(int64_t total_columns) const {
  if (static_cast<int64_t>(assignment.size()) != client_count) {
    throw Error(kModule, "partition", "assignment size does not match client count");
  }
  std::vector<bool> seen(static_cast<size_t>(total_columns), false);
  int64_t covered = 0;
  for (const auto& block : assignment) {
    for (int64_t col : block) {
      if (col < 0 || col >= total_columns || seen[static_cast<size_t>(col)]) {
        throw Error(kModule, "partition", "blocks must be disjoint and in range");
      }
      seen[static_cast<size_t>(col)] = true;
      ++covered;
    }
  }
  if (covered != total_columns) {
    throw Error(kModule, "partition", "blocks must cover all columns");
  }
}

VerticalPartition partition_equal(int64_t d, int64_t clients,
                                  const std::vector<int64_t>* permutation) {
  if (clients < 1 || clients > d) {
    throw Error(kModule, "partition_equal",
                "client count " + std::to_string(clients) + " must be in [1, " +
                    std::to_string(d) + "]");
  }
  std::vector<int64_t> order;
  if (permutation != nullptr) {
    if (static_cast<int64_t>(permutation->size()) != d) {
      throw Error(kModule, "partition_equal", "permutation length must equal column count");
    }
    order = *permutation;
  } else {
    order.resize(static_cast<size_t>(d));
    for (int64_t i = 0; i < d; ++i) order[static_cast<size_t>(i)] = i;
  }

  VerticalPartition part;
  part.client_count = clients;
  part.assignment.resize(static_cast<size_t>(clients));
  const int64_t base = d / clients;
  int64_t cursor = 0;
  for (int64_t i = 0; i < clients; ++i) {
    // Remainder columns all go to the last client.
    const int64_t width = (i == clients - 1) ? d - cursor : base;
    for (int64_t j = 0; j < width; ++j) {
      part.assignment[static_cast<size_t>(i)].push_back(order[static_cast<size_t>(cursor + j)]);
    }
    cursor += width;
  }
  part.validate(d);
  return part;
}

std::vector<int64_t> seeded_column_permutation(int64_t d, uint64_t seed) {
  Rng rng(seed);
  return rng.permutation(d);
}

int64_t one_hot_width(const Schema& schema) {
  int64_t width = 0;
  for (const auto& col : schema.columns) {
    width += col.is_categorical() ? col.cardinality() : 1;
  }
  return width;
}

Normalizer fit_normalizer(const Table& table) {
  if (table.row_count() == 0) {
    throw Error(kModule, "fit_normalizer", "table is empty");
  }
  Normalizer norm;
  const auto means = column_means(table.cells);
  const auto stds = column_stddevs(table.cells);
  norm.means.resize(static_cast<size_t>(table.column_count()));
  norm.stddevs.resize(static_cast<size_t>(table.column_count()));
  for (int64_t c = 0; c < table.column_count(); ++c) {
    const auto i = static_cast<size_t>(c);
    if (table.schema.at(c).is_categorical()) {
      norm.means[i] = 0.0;
      norm.stddevs[i] = 1.0;
    } else {
      norm.means[i] = means[i];
      norm.stddevs[i] = stds[i] > 0.0 ? stds[i] : 1.0;
    }
  }
  return norm;
}

Table Normalizer::apply(const Table& table) const {
  Table out = table;
  for (int64_t c = 0; c < table.column_count(); ++c) {
    if (table.schema.at(c).is_categorical()) continue;
    for (int64_t r = 0; r < table.row_count(); ++r) {
      out.cells.at(r, c) = apply_cell(c, table.cells.at(r, c));
    }
  }
  return out;
}

Table Normalizer::invert(const Table& table) const {
  Table out = table;
  for (int64_t c = 0; c < table.column_count(); ++c) {
    if (table.schema.at(c).is_categorical()) continue;
    for (int64_t r = 0; r < table.row_count(); ++r) {
      out.cells.at(r, c) = invert_cell(c, table.cells.at(r, c));
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> parts;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) parts.push_back(tok);
  return parts;
}

}  // namespace

Schema parse_schema_text(std::istream& in) {
  Schema schema;
  std::string line;
  while (std::getline(in, line)) {
    auto parts = split_ws(line);
    if (parts.empty() || parts.front().starts_with('#')) continue;
    if (parts.size() < 2) {
      throw Error(kModule, "read_schema", "malformed schema line: '" + line + "'");
    }
    ColumnSpec col;
    col.name = parts[0];
    if (parts[1] == "continuous") {
      if (parts.size() != 2) {
        throw Error(kModule, "read_schema", "continuous column '" + col.name + "' takes no categories");
      }
      col.kind = ColumnKind::Continuous;
    } else if (parts[1] == "categorical") {
      col.kind = ColumnKind::Categorical;
      col.categories.assign(parts.begin() + 2, parts.end());
    } else {
      throw Error(kModule, "read_schema", "unknown column kind '" + parts[1] + "'");
    }
    schema.columns.push_back(std::move(col));
  }
  schema.validate();
  return schema;
}

Schema read_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "read_schema", "cannot open '" + path + "'");
  return parse_schema_text(in);
}

void write_schema_file(const Schema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(kModule, "write_schema", "cannot open '" + path + "'");
  for (const auto& col : schema.columns) {
    out << col.name << (col.is_categorical() ? " categorical" : " continuous");
    for (const auto& cat : col.categories) out << ' ' << cat;
    out << '\n';
  }
}

Table parse_csv(std::istream& in, const Schema& schema) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw Error(kModule, "ingest_csv", "missing header row");
  const auto header = split_csv_line(line);
  if (static_cast<int64_t>(header.size()) != schema.width()) {
    throw Error(kModule, "ingest_csv", "header width does not match schema");
  }
  for (int64_t c = 0; c < schema.width(); ++c) {
    if (header[static_cast<size_t>(c)] != schema.at(c).name) {
      throw Error(kModule, "ingest_csv",
                  "header column '" + header[static_cast<size_t>(c)] + "' does not match schema '" +
                      schema.at(c).name + "'");
    }
  }

  // Category label -> index maps, declaration order.
  std::vector<std::unordered_map<std::string, int64_t>> category_index(
      static_cast<size_t>(schema.width()));
  for (int64_t c = 0; c < schema.width(); ++c) {
    const auto& col = schema.at(c);
    for (int64_t k = 0; k < col.cardinality(); ++k) {
      category_index[static_cast<size_t>(c)][col.categories[static_cast<size_t>(k)]] = k;
    }
  }

  std::vector<double> cells;
  int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int64_t>(fields.size()) != schema.width()) {
      throw Error(kModule, "ingest_csv",
                  "row " + std::to_string(rows) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(schema.width()));
    }
    for (int64_t c = 0; c < schema.width(); ++c) {
      const auto& field = fields[static_cast<size_t>(c)];
      const auto& col = schema.at(c);
      if (col.is_categorical()) {
        auto it = category_index[static_cast<size_t>(c)].find(field);
        if (it == category_index[static_cast<size_t>(c)].end()) {
          throw Error(kModule, "ingest_csv",
                      "unknown category '" + field + "' in column '" + col.name + "'");
        }
        cells.push_back(static_cast<double>(it->second));
      } else {
        size_t consumed = 0;
        double value = 0.0;
        try {
          value = std::stod(field, &consumed);
        } catch (const std::exception&) {
          throw Error(kModule, "ingest_csv",
                      "non-numeric value '" + field + "' in column '" + col.name + "' at row " +
                          std::to_string(rows));
        }
        if (consumed != field.size() || !std::isfinite(value)) {
          throw Error(kModule, "ingest_csv",
                      "non-numeric value '" + field + "' in column '" + col.name + "' at row " +
                          std::to_string(rows));
        }
        cells.push_back(value);
      }
    }
    ++rows;
  }

  Table table;
  table.schema = schema;
  table.cells = Matrix(rows, schema.width(), std::move(cells));
  return table;
}

Table ingest_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "ingest_csv", "cannot open '" + path + "'");
  return parse_csv(in, schema);
}

std::string emit_csv_string(const Table& table) {
  std::ostringstream out;
  for (int64_t c = 0; c < table.column_count(); ++c) {
    if (c > 0) out << ',';
    out << table.schema.at(c).name;
  }
  out << '\n';
  for (int64_t r = 0; r < table.row_count(); ++r) {
    for (int64_t c = 0; c < table.column_count(); ++c) {
      if (c > 0) out << ',';
      const auto& col = table.schema.at(c);
      const double v = table.cells.at(r, c);
      if (col.is_categorical()) {
        out << col.categories[static_cast<size_t>(v)];
      } else {
        out << format_continuous(v);
      }
    }
    out << '\n';
  }
  return out.str();
}

void emit_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "emit_csv", "cannot open '" + path + "'");
  out << emit_csv_string(table);
}

Table merge_partitioned(const std::vector<Table>& blocks, const VerticalPartition& partition,
                        const Schema& original_schema) {
  if (static_cast<int64_t>(blocks.size()) != partition.client_count) {
    throw Error(kModule, "merge_partitioned", "block count does not match partition");
  }
  partition.validate(original_schema.width());
  const int64_t rows = blocks.empty() ? 0 : blocks.front().row_count();
  Table out;
  out.schema = original_schema;
  out.cells = Matrix(rows, original_schema.width());
  for (int64_t i = 0; i < partition.client_count; ++i) {
    const auto& block = blocks[static_cast<size_t>(i)];
    const auto& columns = partition.assignment[static_cast<size_t>(i)];
    if (block.row_count() != rows) {
      throw Error(kModule, "merge_partitioned", "blocks disagree on row count");
    }
    if (block.column_count() != static_cast<int64_t>(columns.size())) {
      throw Error(kModule, "merge_partitioned", "block width does not match assignment");
    }
    for (size_t j = 0; j < columns.size(); ++j) {
      const int64_t dst = columns[j];
      if (block.schema.at(static_cast<int64_t>(j)).name != original_schema.at(dst).name) {
        throw Error(kModule, "merge_partitioned", "block schema does not match assignment");
      }
      for (int64_t r = 0; r < rows; ++r) {
        out.cells.at(r, dst) = block.cells.at(r, static_cast<int64_t>(j));
      }
    }
  }
  return out;
}

Table subsample_rows(const Table& table, int64_t target_rows, Rng& rng) {
  if (table.row_count() <= target_rows) return table;
  auto idx = rng.sample_without_replacement(table.row_count(), target_rows);
  std::sort(idx.begin(), idx.end());
  return table.gather(idx);
}

}  // namespace silofuse
