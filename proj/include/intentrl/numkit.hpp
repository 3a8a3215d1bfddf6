#pragma once

// Dense numeric core. Matrices are stored column-major so that W·x runs as a
// sequence of column axpys; every accumulation happens in a fixed order, which
// keeps results bit-identical across runs and vector widths (build with
// -ffp-contract=off).

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace intentrl {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  // Row-major literal, e.g. Matrix::from_rows({{1, 0}, {0, 1}}).
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

  std::span<double> col(std::size_t c) { return {data_.data() + c * rows_, rows_}; }
  std::span<const double> col(std::size_t c) const { return {data_.data() + c * rows_, rows_}; }

  // Column-major element storage.
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { relu, sigmoid, tanh };

const char* to_string(Activation kind);

bool all_finite(std::span<const double> x) noexcept;

// Throws NumericError naming `what` when x holds NaN or Inf.
void require_finite(std::span<const double> x, const char* what);

// Fixed-order dot product with four interleaved partial sums.
double dot(std::span<const double> a, std::span<const double> b);

// y += W·x
void matvec_accumulate(const Matrix& w, std::span<const double> x, std::span<double> y);

// dx += Wᵀ·dy
void matvec_transposed_accumulate(const Matrix& w, std::span<const double> dy, std::span<double> dx);

// dW += dy·xᵀ
void outer_accumulate(Matrix& dw, std::span<const double> dy, std::span<const double> x);

// W·x + b. Throws DimensionError naming both shapes on mismatch.
Vector affine_forward(std::span<const double> x, const Matrix& w, std::span<const double> b);

double sigmoid(double x) noexcept;

Vector activation(std::span<const double> x, Activation kind);

// Max-shifted softmax; throws DimensionError on empty input.
Vector softmax(std::span<const double> z);

std::size_t argmax(std::span<const double> x);

}  // namespace intentrl
