#pragma once

#include <string>

#include "keeplora/matrix.hpp"
#include "keeplora/rng.hpp"
#include "keeplora/subspace.hpp"

namespace keeplora {

/// How the adapter pair (A, B) is initialized. The first four variants set
/// A to the top singular vectors of a (progressively more projected)
/// first-step gradient and keep A frozen; frozen_random_a freezes a random
/// orthonormal frame; vanilla_lora is the unconstrained baseline with a
/// Gaussian A and both factors trainable.
enum class InitVariant {
  keeplora,
  grad_only,
  grad_minus_wp,
  grad_minus_m,
  frozen_random_a,
  vanilla_lora,
};

const char* to_string(InitVariant v);
InitVariant parse_init_variant(const std::string& name);

// vanilla_lora trains both factors; everything else trains B only.
inline bool trains_a(InitVariant v) { return v == InitVariant::vanilla_lora; }
// All variants except vanilla_lora keep A orthonormal and frozen.
inline bool has_orthonormal_a(InitVariant v) {
  return v != InitVariant::vanilla_lora;
}
// Variants that accumulate task feature directions between tasks.
inline bool maintains_task_directions(InitVariant v) {
  return v == InitVariant::keeplora || v == InitVariant::grad_minus_m;
}
// Variants whose gradient projection subtracts the principal weight subspace.
inline bool uses_principal_subspace(InitVariant v) {
  return v == InitVariant::keeplora || v == InitVariant::grad_minus_wp;
}

/// Low-rank adapter state for one weight matrix. The effective weight seen
/// by the forward pass is shifted_base + (alpha/rank) * A * B; at
/// initialization this equals the pre-adaptation weight exactly, because
/// shift_base subtracts the initial product from the base.
struct KeepLoRAAdapter {
  DenseMatrix a;  // d_in x r_eff, frozen except for vanilla_lora
  DenseMatrix b;  // r_eff x d_out, trainable
  double alpha = 16.0;
  int rank = 8;            // configured rank; the alpha/rank scale uses this
  int effective_rank = 0;  // <= rank when the projected gradient is deficient
  DenseMatrix shifted_base;
  InitVariant variant = InitVariant::keeplora;

  double scaling() const { return alpha / static_cast<double>(rank); }
};

/// Builds the adapter from the first-step gradient g (d_in x d_out). For the
/// SVD-based variants A takes the top left singular vectors of the projected
/// gradient and B the matching S V^T block, so the initial A B reproduces the
/// best rank-r approximation of the projected gradient. shifted_base is left
/// empty; call shift_base before use.
KeepLoRAAdapter init_from_gradient(const DenseMatrix& g,
                                   const UnifiedSubspace& u, int r,
                                   double alpha, InitVariant variant,
                                   Rng& rng);

/// shifted_base = w - (alpha/r) A B, so the initial forward pass through the
/// adapter matches a forward pass through w.
void shift_base(const DenseMatrix& w, KeepLoRAAdapter& adapter);

DenseMatrix effective_weight(const KeepLoRAAdapter& adapter);

/// One plain gradient-descent step on B given the loss gradient with respect
/// to the effective weight: B -= eta * (alpha/r) * A^T g_w.
void sgd_step_b(KeepLoRAAdapter& adapter, const DenseMatrix& g_w, double eta);

/// Companion step on A for the vanilla baseline: A -= eta * (alpha/r) g_w B^T.
void sgd_step_a(KeepLoRAAdapter& adapter, const DenseMatrix& g_w, double eta);

/// Final merged weight shifted_base + (alpha/r) A B; becomes the next task's
/// base weight.
DenseMatrix merge(const KeepLoRAAdapter& adapter);

/// Decoupled adaptive optimizer (AdamW) state for one trainable matrix.
struct AdamWState {
  DenseMatrix first_moment;
  DenseMatrix second_moment;
  long step = 0;
};

struct AdamWSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

void adamw_step(DenseMatrix& param, const DenseMatrix& grad, AdamWState& state,
                double lr, const AdamWSettings& settings);

}  // namespace keeplora
