#include "keeplora/adapter.hpp"

#include <cmath>
#include <string>

#include "keeplora/errors.hpp"
#include "keeplora/linalg.hpp"

namespace keeplora {

namespace {
constexpr double kZeroSingularValue = 1e-12;

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, double sigma,
                            Rng& rng) {
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = sigma * rng.normal();
  return m;
}

}  // namespace

const char* to_string(InitVariant v) {
  switch (v) {
    case InitVariant::keeplora: return "keeplora";
    case InitVariant::grad_only: return "grad_only";
    case InitVariant::grad_minus_wp: return "grad_minus_Wp";
    case InitVariant::grad_minus_m: return "grad_minus_M";
    case InitVariant::frozen_random_a: return "frozen_random_A";
    case InitVariant::vanilla_lora: return "vanilla_lora";
  }
  return "unknown";
}

InitVariant parse_init_variant(const std::string& name) {
  if (name == "keeplora") return InitVariant::keeplora;
  if (name == "grad_only") return InitVariant::grad_only;
  if (name == "grad_minus_Wp") return InitVariant::grad_minus_wp;
  if (name == "grad_minus_M") return InitVariant::grad_minus_m;
  if (name == "frozen_random_A") return InitVariant::frozen_random_a;
  if (name == "vanilla_lora") return InitVariant::vanilla_lora;
  throw ConfigError("variant", "unknown init variant '" + name + "'");
}

KeepLoRAAdapter init_from_gradient(const DenseMatrix& g,
                                   const UnifiedSubspace& u, int r,
                                   double alpha, InitVariant variant,
                                   Rng& rng) {
  if (r < 1) {
    throw ConfigError("r", "rank must be >= 1");
  }
  if (g.rows() != u.ambient_dim()) {
    throw ShapeError("init_from_gradient: gradient rows " +
                     std::to_string(g.rows()) + " != ambient dim " +
                     std::to_string(u.ambient_dim()));
  }

  KeepLoRAAdapter adapter;
  adapter.alpha = alpha;
  adapter.rank = r;
  adapter.variant = variant;

  const std::size_t d_in = g.rows();
  const std::size_t d_out = g.cols();

  if (variant == InitVariant::frozen_random_a) {
    // Random orthonormal frame, B = 0.
    DenseMatrix raw = gaussian_matrix(d_in, static_cast<std::size_t>(r), 1.0, rng);
    OrthonormalizeResult frame =
        orthonormalize_against(raw, OrthonormalBasis(d_in));
    if (frame.added.count() != static_cast<std::size_t>(r)) {
      throw NumericalError("init_from_gradient: degenerate random frame");
    }
    adapter.a = frame.added.basis();
    adapter.b = DenseMatrix(static_cast<std::size_t>(r), d_out);
    adapter.effective_rank = r;
    return adapter;
  }

  if (variant == InitVariant::vanilla_lora) {
    // Standard LoRA convention: Gaussian A, zero B, both trainable.
    const double sigma = 1.0 / std::sqrt(static_cast<double>(d_in));
    adapter.a = gaussian_matrix(d_in, static_cast<std::size_t>(r), sigma, rng);
    adapter.b = DenseMatrix(static_cast<std::size_t>(r), d_out);
    adapter.effective_rank = r;
    return adapter;
  }

  DenseMatrix projected = g;
  switch (variant) {
    case InitVariant::keeplora:
      projected = residual_project(g, u);
      break;
    case InitVariant::grad_only:
      break;
    case InitVariant::grad_minus_wp:
      if (!u.principal.basis.empty()) {
        projected = subtract(g, project_onto(g, u.principal.basis));
      }
      break;
    case InitVariant::grad_minus_m:
      if (!u.task_dirs.basis.empty()) {
        projected = subtract(g, project_onto(g, u.task_dirs.basis));
      }
      break;
    default:
      break;
  }

  const SvdResult decomposition = svd(projected);
  std::size_t positive = 0;
  for (double s : decomposition.s) {
    if (s > kZeroSingularValue) ++positive;
  }
  const std::size_t r_eff =
      std::min<std::size_t>(static_cast<std::size_t>(r), positive);
  if (r_eff == 0) {
    throw NumericalError(
        "init_from_gradient: gradient fully inside principal subspace "
        "(projected gradient numerically zero)");
  }

  adapter.a = DenseMatrix(d_in, r_eff);
  for (std::size_t i = 0; i < d_in; ++i)
    for (std::size_t j = 0; j < r_eff; ++j)
      adapter.a(i, j) = decomposition.u(i, j);

  adapter.b = DenseMatrix(r_eff, d_out);
  for (std::size_t i = 0; i < r_eff; ++i)
    for (std::size_t j = 0; j < d_out; ++j)
      adapter.b(i, j) = decomposition.s[i] * decomposition.v(j, i);

  adapter.effective_rank = static_cast<int>(r_eff);
  return adapter;
}

void shift_base(const DenseMatrix& w, KeepLoRAAdapter& adapter) {
  if (w.rows() != adapter.a.rows() || w.cols() != adapter.b.cols()) {
    throw ShapeError("shift_base: weight shape does not match adapter");
  }
  DenseMatrix product = multiply(adapter.a, adapter.b);
  adapter.shifted_base = w;
  add_scaled_in_place(adapter.shifted_base, product, -adapter.scaling());
}

DenseMatrix effective_weight(const KeepLoRAAdapter& adapter) {
  if (adapter.shifted_base.empty()) {
    throw NumericalError("effective_weight: adapter base not shifted yet");
  }
  DenseMatrix w = adapter.shifted_base;
  add_scaled_in_place(w, multiply(adapter.a, adapter.b), adapter.scaling());
  return w;
}

void sgd_step_b(KeepLoRAAdapter& adapter, const DenseMatrix& g_w, double eta) {
  DenseMatrix grad_b = multiply_at_b(adapter.a, g_w);
  add_scaled_in_place(adapter.b, grad_b, -eta * adapter.scaling());
}

void sgd_step_a(KeepLoRAAdapter& adapter, const DenseMatrix& g_w, double eta) {
  if (!trains_a(adapter.variant)) {
    throw NumericalError("sgd_step_a: A is frozen for this variant");
  }
  DenseMatrix grad_a = multiply_a_bt(g_w, adapter.b);
  add_scaled_in_place(adapter.a, grad_a, -eta * adapter.scaling());
}

DenseMatrix merge(const KeepLoRAAdapter& adapter) {
  return effective_weight(adapter);
}

void adamw_step(DenseMatrix& param, const DenseMatrix& grad, AdamWState& state,
                double lr, const AdamWSettings& settings) {
  if (state.step == 0) {
    state.first_moment = DenseMatrix(param.rows(), param.cols());
    state.second_moment = DenseMatrix(param.rows(), param.cols());
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(settings.beta1, state.step);
  const double bc2 = 1.0 - std::pow(settings.beta2, state.step);
  auto p = param.data();
  auto g = grad.data();
  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = settings.beta1 * m[i] + (1.0 - settings.beta1) * g[i];
    v[i] = settings.beta2 * v[i] + (1.0 - settings.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= lr * (m_hat / (std::sqrt(v_hat) + settings.epsilon) +
                  settings.weight_decay * p[i]);
  }
}

}  // namespace keeplora
