#pragma once

#include <cstddef>
#include <vector>

#include "keeplora/linalg.hpp"
#include "keeplora/matrix.hpp"

namespace keeplora {

/// Top left singular vectors of a weight matrix, truncated at the smallest
/// rank whose squared singular values cover epsilon_w of the total energy.
struct PrincipalSubspace {
  OrthonormalBasis basis;  // d_in x p
  double retained_energy_fraction = 0.0;
  std::size_t p = 0;
};

/// Dominant feature directions accumulated across tasks, always kept
/// orthogonal to the paired principal subspace.
struct TaskDirections {
  OrthonormalBasis basis;
  std::vector<std::size_t> per_task_counts;
};

/// The joint protected subspace: principal weight directions plus stored
/// task feature directions. Total column count never exceeds the ambient
/// dimension.
struct UnifiedSubspace {
  PrincipalSubspace principal;
  TaskDirections task_dirs;

  std::size_t ambient_dim() const { return principal.basis.ambient_dim(); }
  std::size_t total_count() const {
    return principal.basis.count() + task_dirs.basis.count();
  }

  // Placeholder with no protected directions (variants that ignore the
  // principal subspace still thread a UnifiedSubspace through the API).
  static UnifiedSubspace empty(std::size_t ambient_dim);
};

PrincipalSubspace extract_principal(const DenseMatrix& w, double epsilon_w);

UnifiedSubspace make_unified(PrincipalSubspace principal);

/// x - Wp Wp^T x - M M^T x
DenseMatrix residual_project(const DenseMatrix& x, const UnifiedSubspace& u);

struct TaskDirectionsUpdate {
  OrthonormalBasis new_dirs;
  std::size_t selected_m = 0;  // directions chosen before re-orthonormalization
  std::size_t dropped = 0;     // lost to re-orthonormalization or capacity
};

/// Selects the minimal number m of dominant residual-feature directions so
/// that the energy already captured by the unified subspace plus the top-m
/// residual singular values reaches epsilon_f of the feature energy. The
/// returned directions are re-orthonormalized against the unified basis.
TaskDirectionsUpdate extract_task_directions(const DenseMatrix& x_t,
                                             const UnifiedSubspace& u,
                                             double epsilon_f);

struct AppendReport {
  std::size_t appended = 0;
  std::size_t dropped_capacity = 0;
};

AppendReport append_task_directions(UnifiedSubspace& u,
                                    const TaskDirectionsUpdate& update);

}  // namespace keeplora
