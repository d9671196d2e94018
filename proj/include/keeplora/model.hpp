#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "keeplora/adapter.hpp"
#include "keeplora/matrix.hpp"

namespace keeplora {

enum class Activation { relu, tanh, none };

const char* to_string(Activation a);
Activation parse_activation(const std::string& name);

/// One labeled mini-batch or dataset split: inputs are rows, labels are
/// class indices in [0, classes).
struct Batch {
  DenseMatrix inputs;  // n x d_in
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct LinearLayer {
  DenseMatrix weight;  // d_in x d_out
  std::vector<double> bias;
  Activation activation = Activation::none;
};

/// Declarative model description; weights are drawn deterministically from
/// init_seed with std init_scale / sqrt(d_in) per layer. Biases start at
/// zero and are never trained.
struct ModelSpec {
  std::vector<int> dims;  // [d_in, hidden..., classes]
  Activation activation = Activation::tanh;
  std::vector<int> adapted_layers;
  std::uint64_t init_seed = 7;
  double init_scale = 1.0;
  // When non-empty, replaces layer 0 with this exact weight (used by the
  // spectral-truncation fixtures).
  DenseMatrix fixed_first_weight;
};

/// Stack of linear layers with elementwise nonlinearities and a logits
/// head. Layers listed in adapted_layers consult their active adapter's
/// effective weight during the forward pass; all other parameters are
/// frozen.
struct LinearModel {
  std::vector<LinearLayer> layers;
  std::vector<int> adapted_layers;
  std::map<int, KeepLoRAAdapter> adapters;  // active during one task

  bool is_adapted(int layer) const;
  DenseMatrix effective_layer_weight(int layer) const;
};

LinearModel make_model(const ModelSpec& spec);

DenseMatrix forward(const LinearModel& model, const DenseMatrix& inputs);

struct LossGrads {
  double loss = 0.0;
  std::map<int, DenseMatrix> weight_grads;  // per adapted layer, d_in x d_out
};

/// Mean softmax cross-entropy and exact analytic gradients with respect to
/// every adapted layer's effective weight.
LossGrads loss_and_grads(const LinearModel& model, const Batch& batch);

/// Inputs reaching layer_idx for the first max_samples examples, returned
/// with samples as columns (d_in x n).
DenseMatrix collect_layer_inputs(const LinearModel& model, const Batch& dataset,
                                 int layer_idx, std::size_t max_samples);

/// Fraction of examples whose argmax over the first `classes` logit columns
/// matches the label. Ties resolve to the lowest class index.
double evaluate_accuracy(const LinearModel& model, const Batch& test,
                         int classes);

}  // namespace keeplora
