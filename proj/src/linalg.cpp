#include "keeplora/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "keeplora/errors.hpp"

namespace keeplora {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenRowMajor> map_of(const DenseMatrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
  DenseMatrix m(static_cast<std::size_t>(e.rows()),
                static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
  return m;
}

// Flip column signs so the largest-magnitude entry of each U column is
// non-negative; mirror the flip into V.
void apply_sign_convention(DenseMatrix& u, DenseMatrix& v) {
  for (std::size_t j = 0; j < u.cols(); ++j) {
    std::size_t pivot = 0;
    double best = std::abs(u(0, j));
    for (std::size_t i = 1; i < u.rows(); ++i) {
      const double mag = std::abs(u(i, j));
      if (mag > best) {
        best = mag;
        pivot = i;
      }
    }
    if (u(pivot, j) < 0.0) {
      for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) = -u(i, j);
      for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
    }
  }
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(std::size_t ambient_dim)
    : ambient_dim_(ambient_dim), basis_(ambient_dim, 0) {}

OrthonormalBasis::OrthonormalBasis(std::size_t ambient_dim, DenseMatrix basis)
    : ambient_dim_(ambient_dim), basis_(std::move(basis)) {
  if (basis_.rows() != ambient_dim_) {
    throw ShapeError("OrthonormalBasis: basis rows " +
                     std::to_string(basis_.rows()) + " != ambient dim " +
                     std::to_string(ambient_dim_));
  }
  if (basis_.cols() > ambient_dim_) {
    throw ShapeError("OrthonormalBasis: more columns than ambient dim");
  }
  const DenseMatrix gram = multiply_at_b(basis_, basis_);
  for (std::size_t i = 0; i < gram.rows(); ++i) {
    for (std::size_t j = 0; j < gram.cols(); ++j) {
      const double expected = (i == j) ? 1.0 : 0.0;
      if (std::abs(gram(i, j) - expected) > kOrthoTol) {
        throw NumericalError("OrthonormalBasis: columns not orthonormal, "
                             "gram deviation " +
                             std::to_string(std::abs(gram(i, j) - expected)));
      }
    }
  }
}

SvdResult svd(const DenseMatrix& m) {
  if (m.empty()) {
    throw ShapeError("svd: empty matrix");
  }
  if (!m.all_finite()) {
    throw NumericalError("svd: non-finite entries in " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " matrix");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(
      map_of(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("svd: failed to converge on " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " matrix");
  }
  SvdResult result;
  result.u = from_eigen(solver.matrixU());
  result.v = from_eigen(solver.matrixV());
  const auto& sv = solver.singularValues();
  result.s.assign(sv.data(), sv.data() + sv.size());
  // Jacobi SVD returns values sorted non-increasing already.
  for (std::size_t i = 1; i < result.s.size(); ++i) {
    if (result.s[i] > result.s[i - 1]) {
      throw NumericalError("svd: singular values out of order");
    }
  }
  apply_sign_convention(result.u, result.v);
  return result;
}

std::size_t energy_rank(std::span<const double> singular_values,
                        double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw NumericalError("energy_rank: epsilon must lie in (0,1)");
  }
  double total = 0.0;
  for (double s : singular_values) total += s * s;
  if (total == 0.0 || singular_values.empty()) {
    throw NumericalError("energy_rank: no energy to threshold");
  }
  const double target = epsilon * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < singular_values.size(); ++i) {
    cumulative += singular_values[i] * singular_values[i];
    if (cumulative >= target) return i + 1;
  }
  return singular_values.size();
}

DenseMatrix project_onto(const DenseMatrix& x, const OrthonormalBasis& q) {
  if (x.rows() != q.ambient_dim()) {
    throw ShapeError("project_onto: x rows " + std::to_string(x.rows()) +
                     " != ambient dim " + std::to_string(q.ambient_dim()));
  }
  if (q.empty()) {
    return DenseMatrix(x.rows(), x.cols());
  }
  return multiply(q.basis(), multiply_at_b(q.basis(), x));
}

OrthonormalizeResult orthonormalize_against(const DenseMatrix& candidates,
                                            const OrthonormalBasis& existing,
                                            double drop_tol) {
  if (!candidates.empty() && candidates.rows() != existing.ambient_dim()) {
    throw ShapeError("orthonormalize_against: candidate rows " +
                     std::to_string(candidates.rows()) + " != ambient dim " +
                     std::to_string(existing.ambient_dim()));
  }
  const std::size_t dim = existing.ambient_dim();
  std::vector<std::vector<double>> accepted;
  std::size_t dropped = 0;

  auto dot_col = [](const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
  };

  for (std::size_t c = 0; c < candidates.cols(); ++c) {
    if (existing.count() + accepted.size() >= dim) {
      ++dropped;
      continue;
    }
    std::vector<double> col(dim);
    for (std::size_t i = 0; i < dim; ++i) col[i] = candidates(i, c);

    // Two projection sweeps; the second pass cleans up the round-off the
    // first leaves behind when the candidate is nearly dependent.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < existing.count(); ++k) {
        double coeff = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
          coeff += existing.basis()(i, k) * col[i];
        for (std::size_t i = 0; i < dim; ++i)
          col[i] -= coeff * existing.basis()(i, k);
      }
      for (const auto& acc : accepted) {
        const double coeff = dot_col(acc, col);
        for (std::size_t i = 0; i < dim; ++i) col[i] -= coeff * acc[i];
      }
    }

    double norm = std::sqrt(dot_col(col, col));
    if (norm < drop_tol) {
      ++dropped;
      continue;
    }
    for (double& v : col) v /= norm;
    accepted.push_back(std::move(col));
  }

  DenseMatrix basis(dim, accepted.size());
  for (std::size_t c = 0; c < accepted.size(); ++c)
    for (std::size_t i = 0; i < dim; ++i) basis(i, c) = accepted[c][i];
  return OrthonormalizeResult{OrthonormalBasis(dim, std::move(basis)),
                              dropped};
}

}  // namespace keeplora
