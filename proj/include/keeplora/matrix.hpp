#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace keeplora {

/// Dense row-major matrix of 64-bit floats. The workhorse value type for
/// weights, gradients and feature blocks. Entries supplied at construction
/// must be finite; zero-initialized construction is always valid.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix transpose(const DenseMatrix& m);

// C = A * B
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B
DenseMatrix multiply_at_b(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix multiply_a_bt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& m, double factor);

// a += factor * b
void add_scaled_in_place(DenseMatrix& a, const DenseMatrix& b, double factor);

double frobenius_norm_sq(const DenseMatrix& m);
double max_abs(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace keeplora
