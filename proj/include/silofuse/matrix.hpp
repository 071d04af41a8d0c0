#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace silofuse {

/// Row-major dense matrix of doubles. The only numeric container in the
/// project; autoencoder latents, diffusion states and feature batches are
/// all instances of this.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int64_t rows, int64_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), fill) {}
  Matrix(int64_t rows, int64_t cols, std::vector<double> data);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t size() const { return rows_ * cols_; }
  bool empty() const { return data_.empty(); }

  double& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols_ + c)]; }
  double at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols_ + c)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  std::span<double> row(int64_t r) { return {data_.data() + r * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row(int64_t r) const {
    return {data_.data() + r * cols_, static_cast<size_t>(cols_)};
  }

  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<double> data_;
};

// C = A * B, with optional transposition of either operand. Backed by BLAS.
Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a = false,
              bool transpose_b = false);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, double s);

void add_in_place(Matrix& a, const Matrix& b);
void scale_in_place(Matrix& a, double s);
// a += s * b
void axpy(Matrix& a, double s, const Matrix& b);

// Broadcasts `bias` (length cols) onto every row.
void add_row_broadcast(Matrix& m, std::span<const double> bias);

Matrix apply(const Matrix& m, const std::function<double(double)>& f);
Matrix hadamard(const Matrix& a, const Matrix& b);

std::vector<double> column_sums(const Matrix& m);
std::vector<double> column_means(const Matrix& m);
// Population (1/n) standard deviation per column.
std::vector<double> column_stddevs(const Matrix& m);

double mean_of_squares(const Matrix& m);

// Horizontal concatenation of equally tall blocks.
Matrix hconcat(const std::vector<Matrix>& blocks);
// Columns [begin, end) as a new matrix.
Matrix column_slice(const Matrix& m, int64_t begin, int64_t end);
// Rows selected by index, in order.
Matrix gather_rows(const Matrix& m, std::span<const int64_t> indices);

}  // namespace silofuse
