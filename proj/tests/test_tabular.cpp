#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "silofuse/dataset.hpp"
#include "silofuse/error.hpp"
#include "silofuse/table.hpp"

using namespace silofuse;

namespace {

Schema two_column_schema() {
  Schema schema;
  schema.columns = {ColumnSpec::continuous("age"),
                    ColumnSpec::categorical("gender", {"M", "F"})};
  return schema;
}

}  // namespace

TEST_CASE("ingest maps categories in declaration order") {
  std::istringstream csv("age,gender\n31,M\n42,F\n23,F\n");
  const Table table = parse_csv(csv, two_column_schema());
  CHECK(table.row_count() == 3);
  CHECK(table.column_count() == 2);
  CHECK(table.cells.at(0, 1) == 0.0);  // M
  CHECK(table.cells.at(1, 1) == 1.0);  // F
  CHECK(table.cells.at(2, 0) == doctest::Approx(23.0));
}

TEST_CASE("ingest rejects unknown categories and bad numbers") {
  std::istringstream bad_cat("age,gender\n31,X\n");
  CHECK_THROWS_WITH_AS(parse_csv(bad_cat, two_column_schema()),
                       doctest::Contains("unknown category"), Error);
  std::istringstream bad_num("age,gender\nabc,M\n");
  CHECK_THROWS_WITH_AS(parse_csv(bad_num, two_column_schema()),
                       doctest::Contains("non-numeric"), Error);
  std::istringstream bad_header("age,sex\n31,M\n");
  CHECK_THROWS_AS(parse_csv(bad_header, two_column_schema()), Error);
}

TEST_CASE("ingest/emit round-trips the desk dataset byte-for-byte") {
  const Table table = make_correlated_fixture(2000, 11);
  const std::string first = emit_csv_string(table);
  std::istringstream in(first);
  const Table again = parse_csv(in, table.schema);
  const std::string second = emit_csv_string(again);
  CHECK(first == second);

  // And once more: idempotent fixed point.
  std::istringstream in2(second);
  CHECK(emit_csv_string(parse_csv(in2, table.schema)) == second);
}

TEST_CASE("schema file round-trip") {
  Schema schema;
  schema.columns = {ColumnSpec::continuous("a"),
                    ColumnSpec::categorical("b", {"x", "y", "z"})};
  std::istringstream in("a continuous\nb categorical x y z\n");
  CHECK(parse_schema_text(in) == schema);
}

TEST_CASE("one_hot_width counts categorical expansion") {
  Schema schema;
  schema.columns = {ColumnSpec::categorical("gender", {"M", "F"}),
                    ColumnSpec::categorical("marital", {"s", "d", "m"}),
                    ColumnSpec::continuous("a"), ColumnSpec::continuous("b"),
                    ColumnSpec::continuous("c")};
  CHECK(one_hot_width(schema) == 8);

  Schema all_cont;
  for (int i = 0; i < 7; ++i) {
    all_cont.columns.push_back(ColumnSpec::continuous("c" + std::to_string(i)));
  }
  CHECK(one_hot_width(all_cont) == 7);

  Schema wide;
  for (int i = 0; i < 10; ++i) {
    std::vector<std::string> cats;
    for (int k = 0; k < 20; ++k) cats.push_back("v" + std::to_string(k));
    wide.columns.push_back(ColumnSpec::categorical("w" + std::to_string(i), cats));
  }
  CHECK(one_hot_width(wide) == 200);
  CHECK(one_hot_width(wide) / wide.width() == 20);  // expansion factor
}

TEST_CASE("one_hot_width >= d with equality iff no categoricals") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    Schema schema;
    bool has_cat = false;
    const int64_t d = rng.uniform_int(1, 12);
    for (int64_t i = 0; i < d; ++i) {
      if (rng.uniform01() < 0.5) {
        schema.columns.push_back(ColumnSpec::continuous("c" + std::to_string(i)));
      } else {
        has_cat = true;
        std::vector<std::string> cats;
        const int64_t k = rng.uniform_int(2, 9);
        for (int64_t j = 0; j < k; ++j) cats.push_back("v" + std::to_string(j));
        schema.columns.push_back(ColumnSpec::categorical("k" + std::to_string(i), cats));
      }
    }
    const int64_t w = one_hot_width(schema);
    CHECK(w >= d);
    CHECK((w == d) == !has_cat);
  }
}

TEST_CASE("partition_equal gives the remainder to the last client") {
  const auto p = partition_equal(10, 4);
  REQUIRE(p.assignment.size() == 4);
  CHECK(p.block_width(0) == 2);
  CHECK(p.block_width(1) == 2);
  CHECK(p.block_width(2) == 2);
  CHECK(p.block_width(3) == 4);
  CHECK(p.assignment[0] == std::vector<int64_t>{0, 1});
  CHECK(p.assignment[3] == std::vector<int64_t>{6, 7, 8, 9});

  const auto even = partition_equal(8, 4);
  for (int i = 0; i < 4; ++i) CHECK(even.block_width(i) == 2);
}

TEST_CASE("partition_equal with the seeded permutation keeps sizes") {
  const auto perm = seeded_column_permutation(10, 12343);
  const auto p = partition_equal(10, 4, &perm);
  CHECK(p.block_width(0) == 2);
  CHECK(p.block_width(3) == 4);
  // Same sizes, shuffled membership.
  const auto plain = partition_equal(10, 4);
  CHECK(p.assignment != plain.assignment);
  std::set<int64_t> seen;
  for (const auto& block : p.assignment) seen.insert(block.begin(), block.end());
  CHECK(seen.size() == 10);
}

TEST_CASE("partition_equal rejects more clients than columns") {
  CHECK_THROWS_AS(partition_equal(3, 4), Error);
  CHECK_THROWS_AS(partition_equal(3, 0), Error);
}

TEST_CASE("partition invariants hold for arbitrary sizes") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t d = rng.uniform_int(1, 40);
    const int64_t m = rng.uniform_int(1, d);
    const auto p = partition_equal(d, m);
    int64_t total = 0;
    std::set<int64_t> seen;
    for (const auto& block : p.assignment) {
      total += static_cast<int64_t>(block.size());
      seen.insert(block.begin(), block.end());
    }
    CHECK(total == d);
    CHECK(static_cast<int64_t>(seen.size()) == d);
    p.validate(d);
  }
}

TEST_CASE("normalizer standardizes with population std") {
  Table table;
  table.schema.columns = {ColumnSpec::continuous("x")};
  table.cells = Matrix(3, 1, {2.0, 4.0, 6.0});
  const auto norm = fit_normalizer(table);
  const Table out = norm.apply(table);
  CHECK(out.cells.at(0, 0) == doctest::Approx(-1.224745).epsilon(1e-5));
  CHECK(out.cells.at(1, 0) == doctest::Approx(0.0));
  CHECK(out.cells.at(2, 0) == doctest::Approx(1.224745).epsilon(1e-5));
}

TEST_CASE("normalizer shifts degenerate columns with std recorded as 1") {
  Table table;
  table.schema.columns = {ColumnSpec::continuous("x")};
  table.cells = Matrix(3, 1, {5.0, 5.0, 5.0});
  const auto norm = fit_normalizer(table);
  CHECK(norm.stddevs[0] == 1.0);
  const Table out = norm.apply(table);
  for (int r = 0; r < 3; ++r) CHECK(out.cells.at(r, 0) == 0.0);
}

TEST_CASE("normalizer apply/invert is the identity within 1e-9") {
  Rng rng(17);
  Table table;
  table.schema.columns = {ColumnSpec::continuous("a"), ColumnSpec::continuous("b"),
                          ColumnSpec::categorical("c", {"u", "v"})};
  table.cells = Matrix(200, 3);
  for (int64_t r = 0; r < 200; ++r) {
    table.cells.at(r, 0) = rng.normal(3.0, 11.0);
    table.cells.at(r, 1) = rng.normal(-40.0, 0.25);
    table.cells.at(r, 2) = static_cast<double>(rng.uniform_int(0, 1));
  }
  const auto norm = fit_normalizer(table);
  const Table round = norm.invert(norm.apply(table));
  for (int64_t r = 0; r < 200; ++r) {
    for (int64_t c = 0; c < 3; ++c) {
      const double expected = table.cells.at(r, c);
      const double got = round.cells.at(r, c);
      CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }

  const Table normalized = norm.apply(table);
  const auto means = column_means(normalized.cells);
  const auto stds = column_stddevs(normalized.cells);
  CHECK(std::abs(means[0]) < 1e-9);
  CHECK(std::abs(means[1]) < 1e-9);
  CHECK(std::abs(stds[0] - 1.0) < 1e-9);
  CHECK(std::abs(stds[1] - 1.0) < 1e-9);
  // Categorical column untouched.
  CHECK(normalized.cells.at(0, 2) == table.cells.at(0, 2));
}

TEST_CASE("merge_partitioned restores column order, permutation included") {
  const Table table = make_correlated_fixture(50, 3);
  const auto perm = seeded_column_permutation(table.column_count(), 12343);
  const auto partition = partition_equal(table.column_count(), 2, &perm);
  std::vector<Table> blocks;
  for (const auto& cols : partition.assignment) blocks.push_back(table.select_columns(cols));
  const Table merged = merge_partitioned(blocks, partition, table.schema);
  CHECK(merged.schema == table.schema);
  CHECK(merged.cells == table.cells);
}

TEST_CASE("table validation catches bad cells") {
  Table table;
  table.schema = two_column_schema();
  table.cells = Matrix(1, 2, {1.0, 5.0});  // category index 5 out of range
  CHECK_THROWS_AS(table.validate(), Error);
  table.cells = Matrix(1, 2, {std::nan(""), 0.0});
  CHECK_THROWS_AS(table.validate(), Error);
}

TEST_CASE("fixture generators are seeded and deterministic") {
  const Table a = make_correlated_fixture(100, 42);
  const Table b = make_correlated_fixture(100, 42);
  CHECK(a.cells == b.cells);
  a.validate();
  make_correlated_wide_fixture(100, 42).validate();

  const Table shuffled = shuffle_columns_independently(a, 7);
  for (int64_t c = 0; c < a.column_count(); ++c) {
    auto orig = a.column(c);
    auto shuf = shuffled.column(c);
    std::sort(orig.begin(), orig.end());
    std::sort(shuf.begin(), shuf.end());
    CHECK(orig == shuf);  // same multiset per column
  }
}
