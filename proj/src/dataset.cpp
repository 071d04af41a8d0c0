#include "silofuse/dataset.hpp"

#include "silofuse/error.hpp"

namespace silofuse {

namespace {
constexpr const char* kModule = "cli";
}

Table make_correlated_fixture(int64_t rows, uint64_t seed) {
  Rng rng(seed);
  Table table;
  table.schema.columns = {
      ColumnSpec::continuous("x1"),
      ColumnSpec::continuous("x2"),
      ColumnSpec::continuous("x3"),
      ColumnSpec::categorical("grade", {"a", "b", "c"}),
      ColumnSpec::categorical("segment", {"s0", "s1", "s2", "s3"}),
  };
  table.cells = Matrix(rows, 5);

  // Latent class drives the continuous means and both categoricals; a shared
  // factor couples the continuous columns within each class.
  const double mu1[3] = {-2.6, 0.0, 2.6};
  const double mu2[3] = {-2.2, 0.4, 3.0};
  const double mu3[3] = {2.4, 0.0, -2.4};
  for (int64_t r = 0; r < rows; ++r) {
    const double cu = rng.uniform01();
    const int cls = cu < 0.4 ? 0 : (cu < 0.75 ? 1 : 2);
    const double shared = rng.normal();
    const double x1 = mu1[cls] + 0.9 * shared + 0.22 * rng.normal();
    const double x2 = mu2[cls] + 0.9 * shared + 0.22 * rng.normal();
    const double x3 = mu3[cls] - 0.8 * shared + 0.22 * rng.normal();

    int64_t grade = cls;
    if (rng.uniform01() < 0.04) grade = rng.uniform_int(0, 2);
    int64_t segment = 2 * (cls == 2 ? 1 : 0) + (shared > 0.0 ? 1 : 0);
    if (rng.uniform01() < 0.04) segment = rng.uniform_int(0, 3);

    table.cells.at(r, 0) = x1;
    table.cells.at(r, 1) = x2;
    table.cells.at(r, 2) = x3;
    table.cells.at(r, 3) = static_cast<double>(grade);
    table.cells.at(r, 4) = static_cast<double>(segment);
  }
  return table;
}

Table make_correlated_wide_fixture(int64_t rows, uint64_t seed) {
  Rng rng(seed);
  Table table;
  table.schema.columns = {
      ColumnSpec::continuous("w1"),
      ColumnSpec::continuous("w2"),
      ColumnSpec::continuous("w3"),
      ColumnSpec::continuous("w4"),
      ColumnSpec::continuous("w5"),
      ColumnSpec::continuous("w6"),
      ColumnSpec::categorical("c1", {"p", "q", "r"}),
      ColumnSpec::categorical("c2", {"m0", "m1", "m2", "m3"}),
      ColumnSpec::categorical("c3", {"no", "yes"}),
      ColumnSpec::categorical("c4", {"k0", "k1", "k2", "k3", "k4"}),
  };
  table.cells = Matrix(rows, 10);

  const double base[3] = {-2.0, 0.0, 2.0};
  for (int64_t r = 0; r < rows; ++r) {
    const double cu = rng.uniform01();
    const int cls = cu < 0.4 ? 0 : (cu < 0.75 ? 1 : 2);
    const double f1 = rng.normal();
    const double f2 = rng.normal();
    const double sign = cls == 1 ? -1.0 : 1.0;
    table.cells.at(r, 0) = base[cls] + 0.8 * f1 + 0.3 * rng.normal();
    table.cells.at(r, 1) = base[cls] + 0.8 * f1 + 0.3 * rng.normal();
    table.cells.at(r, 2) = -base[cls] + 0.7 * f2 + 0.3 * rng.normal();
    table.cells.at(r, 3) = sign * 1.5 + 0.6 * f2 + 0.3 * rng.normal();
    table.cells.at(r, 4) = base[cls] - 0.5 * f1 + 0.5 * f2 + 0.3 * rng.normal();
    table.cells.at(r, 5) = 0.9 * f1 - 0.5 * f2 + 0.3 * rng.normal();

    int64_t c1 = cls;
    if (rng.uniform01() < 0.1) c1 = rng.uniform_int(0, 2);
    int64_t c2 = 2 * (cls == 2 ? 1 : 0) + (f1 > 0.0 ? 1 : 0);
    if (rng.uniform01() < 0.1) c2 = rng.uniform_int(0, 3);
    int64_t c3 = f2 > 0.0 ? 1 : 0;
    if (rng.uniform01() < 0.1) c3 = rng.uniform_int(0, 1);
    int64_t c4 = cls + (f1 + f2 > 0.0 ? 2 : 0);
    if (rng.uniform01() < 0.1) c4 = rng.uniform_int(0, 4);
    table.cells.at(r, 6) = static_cast<double>(c1);
    table.cells.at(r, 7) = static_cast<double>(c2);
    table.cells.at(r, 8) = static_cast<double>(c3);
    table.cells.at(r, 9) = static_cast<double>(c4);
  }
  return table;
}

Table make_gaussian_table(int64_t rows, int64_t columns, uint64_t seed) {
  Rng rng(seed);
  Table table;
  for (int64_t c = 0; c < columns; ++c) {
    table.schema.columns.push_back(ColumnSpec::continuous("g" + std::to_string(c)));
  }
  table.cells = rng.normal_matrix(rows, columns);
  return table;
}

Matrix make_mixture_latents(int64_t rows, uint64_t seed) {
  Rng rng(seed);
  Matrix out(rows, 2);
  for (int64_t r = 0; r < rows; ++r) {
    const bool first = rng.uniform01() < 0.5;
    const double cx = first ? -2.0 : 2.0;
    const double cy = first ? 1.5 : -1.5;
    out.at(r, 0) = cx + 0.5 * rng.normal();
    out.at(r, 1) = cy + 0.5 * rng.normal();
  }
  return out;
}

Table make_marginal_synthetic(const Table& source, uint64_t seed) {
  if (source.row_count() == 0) throw Error(kModule, "marginal_synthetic", "empty source");
  Table out = source;
  for (int64_t c = 0; c < source.column_count(); ++c) {
    Rng rng(derive_seed(seed, "marginal-column", static_cast<uint64_t>(c)));
    for (int64_t r = 0; r < source.row_count(); ++r) {
      const int64_t pick = rng.uniform_int(0, source.row_count() - 1);
      out.cells.at(r, c) = source.cells.at(pick, c);
    }
  }
  return out;
}

Table shuffle_columns_independently(const Table& source, uint64_t seed) {
  Table out = source;
  for (int64_t c = 0; c < source.column_count(); ++c) {
    Rng rng(derive_seed(seed, "shuffle-column", static_cast<uint64_t>(c)));
    const auto perm = rng.permutation(source.row_count());
    for (int64_t r = 0; r < source.row_count(); ++r) {
      out.cells.at(r, c) = source.cells.at(perm[static_cast<size_t>(r)], c);
    }
  }
  return out;
}

Table make_builtin_dataset(const std::string& name, int64_t rows, uint64_t seed) {
  if (name == "correlated") return make_correlated_fixture(rows, seed);
  if (name == "correlated-wide") return make_correlated_wide_fixture(rows, seed);
  if (name == "gaussian") return make_gaussian_table(rows, 5, seed);
  throw Error(kModule, "dataset", "unknown built-in dataset '" + name + "'");
}

}  // namespace silofuse
