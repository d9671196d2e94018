#include "keeplora/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keeplora/errors.hpp"
#include "keeplora/rng.hpp"

namespace keeplora {

namespace {

double activate(double z, Activation a) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::none: return z;
  }
  return z;
}

// Derivative expressed through the activation output h = act(z).
double activate_grad(double z, double h, Activation a) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - h * h;
    case Activation::none: return 1.0;
  }
  return 1.0;
}

struct ForwardTrace {
  // layer_inputs[l] is the n x d_in(l) matrix feeding layer l;
  // layer_inputs.back() is the final logits.
  std::vector<DenseMatrix> layer_inputs;
  std::vector<DenseMatrix> pre_activations;
};

ForwardTrace forward_trace(const LinearModel& model, const DenseMatrix& inputs) {
  if (model.layers.empty()) {
    throw ShapeError("forward: model has no layers");
  }
  if (inputs.cols() != model.layers.front().weight.rows()) {
    throw ShapeError("forward: input width " + std::to_string(inputs.cols()) +
                     " != first layer d_in " +
                     std::to_string(model.layers.front().weight.rows()));
  }
  ForwardTrace trace;
  trace.layer_inputs.reserve(model.layers.size() + 1);
  trace.pre_activations.reserve(model.layers.size());
  trace.layer_inputs.push_back(inputs);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LinearLayer& layer = model.layers[l];
    const DenseMatrix w = model.effective_layer_weight(static_cast<int>(l));
    DenseMatrix z = multiply(trace.layer_inputs.back(), w);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += layer.bias[j];
    DenseMatrix h(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j)
        h(i, j) = activate(z(i, j), layer.activation);
    trace.pre_activations.push_back(std::move(z));
    trace.layer_inputs.push_back(std::move(h));
  }
  return trace;
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::none: return "none";
  }
  return "none";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "none") return Activation::none;
  throw ConfigError("activation", "unknown activation '" + name + "'");
}

bool LinearModel::is_adapted(int layer) const {
  return std::find(adapted_layers.begin(), adapted_layers.end(), layer) !=
         adapted_layers.end();
}

DenseMatrix LinearModel::effective_layer_weight(int layer) const {
  auto it = adapters.find(layer);
  if (it != adapters.end()) {
    return effective_weight(it->second);
  }
  return layers[static_cast<std::size_t>(layer)].weight;
}

LinearModel make_model(const ModelSpec& spec) {
  if (spec.dims.size() < 2) {
    throw ConfigError("model.dims", "need at least [d_in, classes]");
  }
  for (int d : spec.dims) {
    if (d < 1) throw ConfigError("model.dims", "dimensions must be positive");
  }
  LinearModel model;
  Rng rng(mix_seed({spec.init_seed, 0x6d6f64656cULL}));
  const std::size_t n_layers = spec.dims.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t d_in = static_cast<std::size_t>(spec.dims[l]);
    const std::size_t d_out = static_cast<std::size_t>(spec.dims[l + 1]);
    LinearLayer layer;
    layer.weight = DenseMatrix(d_in, d_out);
    const double sigma = spec.init_scale / std::sqrt(static_cast<double>(d_in));
    for (std::size_t i = 0; i < d_in; ++i)
      for (std::size_t j = 0; j < d_out; ++j)
        layer.weight(i, j) = sigma * rng.normal();
    layer.bias.assign(d_out, 0.0);
    // Hidden layers share the configured nonlinearity; the head emits logits.
    layer.activation =
        (l + 1 == n_layers) ? Activation::none : spec.activation;
    model.layers.push_back(std::move(layer));
  }
  if (!spec.fixed_first_weight.empty()) {
    if (spec.fixed_first_weight.rows() != model.layers[0].weight.rows() ||
        spec.fixed_first_weight.cols() != model.layers[0].weight.cols()) {
      throw ConfigError("model.dims",
                        "fixed first weight does not match dims[0] x dims[1]");
    }
    model.layers[0].weight = spec.fixed_first_weight;
  }
  for (int l : spec.adapted_layers) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_layers) {
      throw ConfigError("model.adapted_layers",
                        "layer index " + std::to_string(l) + " out of range");
    }
  }
  model.adapted_layers = spec.adapted_layers;
  std::sort(model.adapted_layers.begin(), model.adapted_layers.end());
  return model;
}

DenseMatrix forward(const LinearModel& model, const DenseMatrix& inputs) {
  return forward_trace(model, inputs).layer_inputs.back();
}

LossGrads loss_and_grads(const LinearModel& model, const Batch& batch) {
  if (batch.size() == 0) {
    throw ShapeError("loss_and_grads: empty batch");
  }
  if (batch.inputs.rows() != batch.size()) {
    throw ShapeError("loss_and_grads: inputs/labels row mismatch");
  }
  const ForwardTrace trace = forward_trace(model, batch.inputs);
  const DenseMatrix& logits = trace.layer_inputs.back();
  const std::size_t n = batch.size();
  const std::size_t classes = logits.cols();

  // Mean softmax cross-entropy with the usual max-shift for stability;
  // delta = (softmax - onehot) / n is the logits gradient.
  double loss = 0.0;
  DenseMatrix delta(n, classes);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = batch.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ShapeError("loss_and_grads: label " + std::to_string(label) +
                       " outside [0," + std::to_string(classes) + ")");
    }
    double row_max = logits(i, 0);
    for (std::size_t j = 1; j < classes; ++j)
      row_max = std::max(row_max, logits(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j)
      sum += std::exp(logits(i, j) - row_max);
    loss += std::log(sum) - (logits(i, static_cast<std::size_t>(label)) - row_max);
    for (std::size_t j = 0; j < classes; ++j) {
      delta(i, j) = std::exp(logits(i, j) - row_max) / sum;
    }
    delta(i, static_cast<std::size_t>(label)) -= 1.0;
  }
  loss /= static_cast<double>(n);
  for (double& v : delta.data()) v /= static_cast<double>(n);

  LossGrads result;
  result.loss = loss;

  // Backward sweep; delta holds dL/d(pre-activation of layer l).
  for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
    const std::size_t lu = static_cast<std::size_t>(l);
    if (model.is_adapted(l)) {
      result.weight_grads[l] = multiply_at_b(trace.layer_inputs[lu], delta);
    }
    if (l == 0) break;
    const DenseMatrix w = model.effective_layer_weight(l);
    DenseMatrix upstream = multiply_a_bt(delta, w);  // dL/d(h_{l-1})
    const DenseMatrix& z_prev = trace.pre_activations[lu - 1];
    const DenseMatrix& h_prev = trace.layer_inputs[lu];
    const Activation act = model.layers[lu - 1].activation;
    for (std::size_t i = 0; i < upstream.rows(); ++i)
      for (std::size_t j = 0; j < upstream.cols(); ++j)
        upstream(i, j) *= activate_grad(z_prev(i, j), h_prev(i, j), act);
    delta = std::move(upstream);
  }
  return result;
}

DenseMatrix collect_layer_inputs(const LinearModel& model, const Batch& dataset,
                                 int layer_idx, std::size_t max_samples) {
  if (!model.is_adapted(layer_idx)) {
    throw ShapeError("collect_layer_inputs: layer " +
                     std::to_string(layer_idx) + " carries no adapter");
  }
  if (dataset.size() == 0) {
    throw ShapeError("collect_layer_inputs: empty dataset");
  }
  const std::size_t n = std::min(max_samples, dataset.size());
  DenseMatrix head(n, dataset.inputs.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dataset.inputs.cols(); ++j)
      head(i, j) = dataset.inputs(i, j);
  const ForwardTrace trace = forward_trace(model, head);
  const DenseMatrix& at_layer =
      trace.layer_inputs[static_cast<std::size_t>(layer_idx)];
  return transpose(at_layer);  // columns are samples
}

double evaluate_accuracy(const LinearModel& model, const Batch& test,
                         int classes) {
  if (test.size() == 0) {
    throw ShapeError("evaluate_accuracy: empty test split");
  }
  const DenseMatrix logits = forward(model, test.inputs);
  if (static_cast<std::size_t>(classes) > logits.cols()) {
    throw ShapeError("evaluate_accuracy: task classes exceed logit width");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < static_cast<std::size_t>(classes); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    if (static_cast<int>(best) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace keeplora
