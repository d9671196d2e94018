#include "keeplora/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "keeplora/errors.hpp"

namespace keeplora {

namespace {

void check_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                      const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("DenseMatrix: data length " +
                     std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  if (!all_finite()) {
    throw NumericalError("DenseMatrix: non-finite entry at construction");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("multiply: inner dimensions " + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

DenseMatrix multiply_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("multiply_at_b: row counts " + std::to_string(a.rows()) +
                     " vs " + std::to_string(b.rows()));
  }
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  }
  return c;
}

DenseMatrix multiply_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("multiply_a_bt: column counts " +
                     std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  }
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(j, k);
      c(i, j) = sum;
    }
  }
  return c;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  check_same_shape(a, b, "add");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  check_same_shape(a, b, "subtract");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

DenseMatrix scaled(const DenseMatrix& m, double factor) {
  DenseMatrix c = m;
  for (double& v : c.data()) v *= factor;
  return c;
}

void add_scaled_in_place(DenseMatrix& a, const DenseMatrix& b, double factor) {
  check_same_shape(a, b, "add_scaled_in_place");
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += factor * bd[i];
}

double frobenius_norm_sq(const DenseMatrix& m) {
  double sum = 0.0;
  for (double v : m.data()) sum += v * v;
  return sum;
}

double max_abs(const DenseMatrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  check_same_shape(a, b, "max_abs_diff");
  double best = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i)
    best = std::max(best, std::abs(ad[i] - bd[i]));
  return best;
}

}  // namespace keeplora
