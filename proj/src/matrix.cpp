#include "silofuse/matrix.hpp"

#include <cblas.h>

#include <cmath>
#include <cstdlib>
#include <stdexcept>

extern "C" void openblas_set_num_threads(int);

namespace silofuse {

namespace {
// Single-threaded BLAS: deterministic results and safe concurrent matmuls
// from the per-client training threads.
struct BlasInit {
  BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit blas_init;
}  // namespace

Matrix::Matrix(int64_t rows, int64_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != rows_ * cols_) {
    throw std::invalid_argument("Matrix: data length does not match rows*cols");
  }
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a, bool transpose_b) {
  const int64_t m = transpose_a ? a.cols() : a.rows();
  const int64_t k = transpose_a ? a.rows() : a.cols();
  const int64_t kb = transpose_b ? b.cols() : b.rows();
  const int64_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) throw std::invalid_argument("matmul: inner dimensions disagree");
  Matrix c(m, n);
  if (m == 0 || n == 0 || k == 0) return c;
  cblas_dgemm(CblasRowMajor, transpose_a ? CblasTrans : CblasNoTrans,
              transpose_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), 1.0, a.data(), static_cast<int>(a.cols()), b.data(),
              static_cast<int>(b.cols()), 0.0, c.data(), static_cast<int>(n));
  return c;
}

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}
}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "operator+");
  Matrix c = a;
  add_in_place(c, b);
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "operator-");
  Matrix c = a;
  for (int64_t i = 0; i < c.size(); ++i) c.storage()[i] -= b.storage()[i];
  return c;
}

Matrix operator*(const Matrix& a, double s) {
  Matrix c = a;
  scale_in_place(c, s);
  return c;
}

void add_in_place(Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "add_in_place");
  for (int64_t i = 0; i < a.size(); ++i) a.storage()[i] += b.storage()[i];
}

void scale_in_place(Matrix& a, double s) {
  for (double& v : a.storage()) v *= s;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  check_same_shape(a, b, "axpy");
  for (int64_t i = 0; i < a.size(); ++i) a.storage()[i] += s * b.storage()[i];
}

void add_row_broadcast(Matrix& m, std::span<const double> bias) {
  if (static_cast<int64_t>(bias.size()) != m.cols()) {
    throw std::invalid_argument("add_row_broadcast: bias width mismatch");
  }
  for (int64_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (int64_t c = 0; c < m.cols(); ++c) row[c] += bias[c];
  }
}

Matrix apply(const Matrix& m, const std::function<double(double)>& f) {
  Matrix out = m;
  for (double& v : out.storage()) v = f(v);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "hadamard");
  Matrix c = a;
  for (int64_t i = 0; i < c.size(); ++i) c.storage()[i] *= b.storage()[i];
  return c;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(static_cast<size_t>(m.cols()), 0.0);
  for (int64_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (int64_t c = 0; c < m.cols(); ++c) sums[c] += row[c];
  }
  return sums;
}

std::vector<double> column_means(const Matrix& m) {
  auto sums = column_sums(m);
  if (m.rows() > 0) {
    for (double& s : sums) s /= static_cast<double>(m.rows());
  }
  return sums;
}

std::vector<double> column_stddevs(const Matrix& m) {
  const auto means = column_means(m);
  std::vector<double> acc(static_cast<size_t>(m.cols()), 0.0);
  for (int64_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (int64_t c = 0; c < m.cols(); ++c) {
      const double d = row[c] - means[c];
      acc[c] += d * d;
    }
  }
  if (m.rows() > 0) {
    for (double& v : acc) v = std::sqrt(v / static_cast<double>(m.rows()));
  }
  return acc;
}

double mean_of_squares(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.storage()) acc += v * v;
  return m.size() > 0 ? acc / static_cast<double>(m.size()) : 0.0;
}

Matrix hconcat(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return {};
  int64_t rows = blocks.front().rows();
  int64_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw std::invalid_argument("hconcat: row counts differ");
    cols += b.cols();
  }
  Matrix out(rows, cols);
  int64_t offset = 0;
  for (const auto& b : blocks) {
    for (int64_t r = 0; r < rows; ++r) {
      auto src = b.row(r);
      auto dst = out.row(r);
      for (int64_t c = 0; c < b.cols(); ++c) dst[offset + c] = src[c];
    }
    offset += b.cols();
  }
  return out;
}

Matrix column_slice(const Matrix& m, int64_t begin, int64_t end) {
  if (begin < 0 || end > m.cols() || begin > end) {
    throw std::invalid_argument("column_slice: bad range");
  }
  Matrix out(m.rows(), end - begin);
  for (int64_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r);
    auto dst = out.row(r);
    for (int64_t c = begin; c < end; ++c) dst[c - begin] = src[c];
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const int64_t> indices) {
  Matrix out(static_cast<int64_t>(indices.size()), m.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    auto src = m.row(indices[i]);
    auto dst = out.row(static_cast<int64_t>(i));
    for (int64_t c = 0; c < m.cols(); ++c) dst[c] = src[c];
  }
  return out;
}

}  // namespace silofuse
