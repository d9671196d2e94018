#include "keeplora/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keeplora/errors.hpp"

namespace keeplora {

namespace {
constexpr double kZeroSingularValue = 1e-12;
}

UnifiedSubspace UnifiedSubspace::empty(std::size_t ambient_dim) {
  UnifiedSubspace u{
      PrincipalSubspace{OrthonormalBasis(ambient_dim), 0.0, 0},
      TaskDirections{OrthonormalBasis(ambient_dim), {}}};
  return u;
}

PrincipalSubspace extract_principal(const DenseMatrix& w, double epsilon_w) {
  if (w.empty()) {
    throw ShapeError("extract_principal: empty weight matrix");
  }
  const SvdResult decomposition = svd(w);
  // energy_rank rejects the all-zero case (no principal subspace).
  const std::size_t p = energy_rank(decomposition.s, epsilon_w);

  double total = 0.0;
  double kept = 0.0;
  for (std::size_t i = 0; i < decomposition.s.size(); ++i) {
    const double e = decomposition.s[i] * decomposition.s[i];
    total += e;
    if (i < p) kept += e;
  }

  DenseMatrix basis(w.rows(), p);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < p; ++j) basis(i, j) = decomposition.u(i, j);

  return PrincipalSubspace{OrthonormalBasis(w.rows(), std::move(basis)),
                           kept / total, p};
}

UnifiedSubspace make_unified(PrincipalSubspace principal) {
  const std::size_t dim = principal.basis.ambient_dim();
  return UnifiedSubspace{std::move(principal),
                         TaskDirections{OrthonormalBasis(dim), {}}};
}

DenseMatrix residual_project(const DenseMatrix& x, const UnifiedSubspace& u) {
  if (x.rows() != u.ambient_dim()) {
    throw ShapeError("residual_project: x rows " + std::to_string(x.rows()) +
                     " != ambient dim " + std::to_string(u.ambient_dim()));
  }
  DenseMatrix result = x;
  if (!u.principal.basis.empty()) {
    result = subtract(result, project_onto(x, u.principal.basis));
  }
  if (!u.task_dirs.basis.empty()) {
    result = subtract(result, project_onto(x, u.task_dirs.basis));
  }
  return result;
}

TaskDirectionsUpdate extract_task_directions(const DenseMatrix& x_t,
                                             const UnifiedSubspace& u,
                                             double epsilon_f) {
  if (x_t.cols() == 0 || x_t.rows() == 0) {
    throw ShapeError("extract_task_directions: no feature samples");
  }
  if (epsilon_f <= 0.0 || epsilon_f >= 1.0) {
    throw NumericalError("extract_task_directions: epsilon_f must lie in (0,1)");
  }
  if (x_t.rows() != u.ambient_dim()) {
    throw ShapeError("extract_task_directions: feature rows " +
                     std::to_string(x_t.rows()) + " != ambient dim " +
                     std::to_string(u.ambient_dim()));
  }

  const double total_energy = frobenius_norm_sq(x_t);
  double captured = 0.0;
  if (!u.principal.basis.empty()) {
    captured += frobenius_norm_sq(project_onto(x_t, u.principal.basis));
  }
  if (!u.task_dirs.basis.empty()) {
    captured += frobenius_norm_sq(project_onto(x_t, u.task_dirs.basis));
  }

  const DenseMatrix residual = residual_project(x_t, u);
  const double target = epsilon_f * total_energy;

  std::size_t m = 0;
  DenseMatrix selected(u.ambient_dim(), 0);
  if (captured < target && total_energy > 0.0) {
    const SvdResult decomposition = svd(residual);
    std::size_t positive = 0;
    for (double s : decomposition.s) {
      if (s > kZeroSingularValue) ++positive;
    }
    double running = captured;
    while (m < positive && running < target) {
      running += decomposition.s[m] * decomposition.s[m];
      ++m;
    }
    selected = DenseMatrix(u.ambient_dim(), m);
    for (std::size_t i = 0; i < u.ambient_dim(); ++i)
      for (std::size_t j = 0; j < m; ++j) selected(i, j) = decomposition.u(i, j);
  }

  // Re-orthonormalize against everything already stored; capacity is capped
  // at the ambient dimension inside orthonormalize_against.
  DenseMatrix unified(u.ambient_dim(),
                      u.principal.basis.count() + u.task_dirs.basis.count());
  for (std::size_t i = 0; i < u.ambient_dim(); ++i) {
    std::size_t col = 0;
    for (std::size_t j = 0; j < u.principal.basis.count(); ++j, ++col)
      unified(i, col) = u.principal.basis.basis()(i, j);
    for (std::size_t j = 0; j < u.task_dirs.basis.count(); ++j, ++col)
      unified(i, col) = u.task_dirs.basis.basis()(i, j);
  }
  OrthonormalizeResult cleaned = orthonormalize_against(
      selected, OrthonormalBasis(u.ambient_dim(), std::move(unified)));

  return TaskDirectionsUpdate{std::move(cleaned.added), m, cleaned.dropped};
}

AppendReport append_task_directions(UnifiedSubspace& u,
                                    const TaskDirectionsUpdate& update) {
  const std::size_t dim = u.ambient_dim();
  if (update.new_dirs.ambient_dim() != dim) {
    throw ShapeError("append_task_directions: ambient dim mismatch");
  }

  // New directions must arrive orthogonal to the stored unified basis.
  constexpr double kOrthogonalityPre = 1e-8;
  auto check_against = [&](const OrthonormalBasis& stored) {
    if (stored.empty() || update.new_dirs.empty()) return;
    const DenseMatrix overlap =
        multiply_at_b(stored.basis(), update.new_dirs.basis());
    if (max_abs(overlap) > kOrthogonalityPre) {
      throw NumericalError(
          "append_task_directions: new directions not orthogonal to the "
          "unified basis (max overlap " + std::to_string(max_abs(overlap)) +
          ")");
    }
  };
  check_against(u.principal.basis);
  check_against(u.task_dirs.basis);

  const std::size_t capacity = dim - u.total_count();
  const std::size_t take = std::min(capacity, update.new_dirs.count());
  const std::size_t dropped = update.new_dirs.count() - take;

  DenseMatrix grown(dim, u.task_dirs.basis.count() + take);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < u.task_dirs.basis.count(); ++j)
      grown(i, j) = u.task_dirs.basis.basis()(i, j);
    for (std::size_t j = 0; j < take; ++j)
      grown(i, u.task_dirs.basis.count() + j) = update.new_dirs.basis()(i, j);
  }
  u.task_dirs.basis = OrthonormalBasis(dim, std::move(grown));
  u.task_dirs.per_task_counts.push_back(take);
  return AppendReport{take, dropped};
}

}  // namespace keeplora
