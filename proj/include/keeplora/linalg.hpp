#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "keeplora/matrix.hpp"

namespace keeplora {

/// Thin SVD m = U * diag(S) * V^T with a fixed sign convention: in each
/// column of U the entry of largest magnitude is non-negative (ties broken
/// by lowest row index), and V's sign follows so the product is preserved.
/// Singular values are non-negative and sorted non-increasing.
struct SvdResult {
  DenseMatrix u;
  std::vector<double> s;
  DenseMatrix v;
};

/// A (possibly empty) set of orthonormal columns in a fixed ambient space.
/// Construction verifies ||basis^T basis - I||_max <= 1e-10.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(std::size_t ambient_dim);
  OrthonormalBasis(std::size_t ambient_dim, DenseMatrix basis);

  std::size_t ambient_dim() const { return ambient_dim_; }
  std::size_t count() const { return basis_.cols(); }
  bool empty() const { return count() == 0; }
  const DenseMatrix& basis() const { return basis_; }

  static constexpr double kOrthoTol = 1e-10;

 private:
  std::size_t ambient_dim_ = 0;
  DenseMatrix basis_;  // ambient_dim x k
};

SvdResult svd(const DenseMatrix& m);

/// Minimal p with sum_{i<p} s_i^2 >= epsilon * sum_i s_i^2. Values must be
/// non-increasing and not all zero; epsilon in (0,1).
std::size_t energy_rank(std::span<const double> singular_values,
                        double epsilon);

/// q.basis * (q.basis^T * x); the zero matrix when the basis is empty.
DenseMatrix project_onto(const DenseMatrix& x, const OrthonormalBasis& q);

struct OrthonormalizeResult {
  OrthonormalBasis added;
  std::size_t dropped = 0;  // candidates absorbed by existing span or capacity
};

/// Gram-Schmidt with a re-orthogonalization pass. Candidate columns whose
/// post-projection norm falls below drop_tol are dropped, as are columns
/// that would push the total count past the ambient dimension.
OrthonormalizeResult orthonormalize_against(const DenseMatrix& candidates,
                                            const OrthonormalBasis& existing,
                                            double drop_tol = 1e-8);

}  // namespace keeplora
