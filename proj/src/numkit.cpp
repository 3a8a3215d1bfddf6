#include "intentrl/numkit.hpp"

#include <algorithm>
#include <cmath>

#include "intentrl/errors.hpp"

namespace intentrl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw DimensionError("Matrix::from_rows: ragged rows");
    }
    std::size_t j = 0;
    for (double v : row) {
      m(i, j++) = v;
    }
    ++i;
  }
  return m;
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

const char* to_string(Activation kind) {
  switch (kind) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
  }
  return "?";
}

bool all_finite(std::span<const double> x) noexcept {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> x, const char* what) {
  if (!all_finite(x)) {
    throw NumericError(std::string(what) + ": non-finite value");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) {
    s0 += a[i] * b[i];
  }
  return (s0 + s1) + (s2 + s3);
}

void matvec_accumulate(const Matrix& w, std::span<const double> x, std::span<double> y) {
  if (w.cols() != x.size() || w.rows() != y.size()) {
    throw DimensionError("matvec: W" + w.shape_string() + " x(" + std::to_string(x.size()) +
                         ") y(" + std::to_string(y.size()) + ")");
  }
  const std::size_t rows = w.rows();
  double* out = y.data();
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) {
      continue;
    }
    const double* column = w.col(j).data();
    for (std::size_t i = 0; i < rows; ++i) {
      out[i] += column[i] * xj;
    }
  }
}

void matvec_transposed_accumulate(const Matrix& w, std::span<const double> dy,
                                  std::span<double> dx) {
  if (w.rows() != dy.size() || w.cols() != dx.size()) {
    throw DimensionError("matvec_transposed: W" + w.shape_string() + " dy(" +
                         std::to_string(dy.size()) + ") dx(" + std::to_string(dx.size()) + ")");
  }
  for (std::size_t j = 0; j < w.cols(); ++j) {
    dx[j] += dot(w.col(j), dy);
  }
}

void outer_accumulate(Matrix& dw, std::span<const double> dy, std::span<const double> x) {
  if (dw.rows() != dy.size() || dw.cols() != x.size()) {
    throw DimensionError("outer: dW" + dw.shape_string() + " dy(" + std::to_string(dy.size()) +
                         ") x(" + std::to_string(x.size()) + ")");
  }
  const std::size_t rows = dw.rows();
  for (std::size_t j = 0; j < dw.cols(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) {
      continue;
    }
    double* column = dw.col(j).data();
    for (std::size_t i = 0; i < rows; ++i) {
      column[i] += dy[i] * xj;
    }
  }
}

Vector affine_forward(std::span<const double> x, const Matrix& w, std::span<const double> b) {
  if (w.cols() != x.size() || w.rows() != b.size()) {
    throw DimensionError("affine: W" + w.shape_string() + " incompatible with x(" +
                         std::to_string(x.size()) + ") and b(" + std::to_string(b.size()) + ")");
  }
  Vector y(b.begin(), b.end());
  matvec_accumulate(w, x, y);
  return y;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector activation(std::span<const double> x, Activation kind) {
  require_finite(x, "activation input");
  Vector y(x.size());
  switch (kind) {
    case Activation::relu:
      std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
      break;
    case Activation::sigmoid:
      std::transform(x.begin(), x.end(), y.begin(), [](double v) { return sigmoid(v); });
      break;
    case Activation::tanh:
      std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::tanh(v); });
      break;
  }
  return y;
}

Vector softmax(std::span<const double> z) {
  if (z.empty()) {
    throw DimensionError("softmax: empty input");
  }
  require_finite(z, "softmax input");
  const double shift = *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - shift);
    total += p[i];
  }
  for (double& v : p) {
    v /= total;
  }
  return p;
}

std::size_t argmax(std::span<const double> x) {
  if (x.empty()) {
    throw DimensionError("argmax: empty input");
  }
  return static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
}

}  // namespace intentrl
