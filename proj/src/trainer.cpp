#include "keeplora/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "keeplora/errors.hpp"
#include "keeplora/rng.hpp"

namespace keeplora {

namespace {

constexpr std::uint64_t kTagShuffle = 0x73687566ULL;
constexpr std::uint64_t kTagInit = 0x696e6974ULL;

Batch take_rows(const Batch& source, const std::vector<std::size_t>& indices,
                std::size_t first, std::size_t count) {
  Batch batch;
  batch.inputs = DenseMatrix(count, source.inputs.cols());
  batch.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t row = indices[first + i];
    for (std::size_t j = 0; j < source.inputs.cols(); ++j)
      batch.inputs(i, j) = source.inputs(row, j);
    batch.labels[i] = source.labels[row];
  }
  return batch;
}

std::vector<std::size_t> epoch_permutation(std::size_t n,
                                           const RunConfig& config, int stage,
                                           int epoch) {
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  Rng rng(mix_seed({config.seed, kTagShuffle,
                    static_cast<std::uint64_t>(stage),
                    static_cast<std::uint64_t>(epoch)}));
  shuffle(indices, rng);
  return indices;
}

// Evaluation fan-out over tasks; results gathered by task index so the
// output is identical for any thread count.
std::vector<double> evaluate_all(const LinearModel& model,
                                 const TaskStream& stream, int threads) {
  const std::size_t n = stream.tasks.size();
  std::vector<double> row(n, 0.0);
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t t = 0; t < n; ++t) {
      row[t] = evaluate_accuracy(model, stream.tasks[t].test,
                                 stream.tasks[t].classes);
    }
    return row;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t t = static_cast<std::size_t>(w); t < n;
           t += static_cast<std::size_t>(workers)) {
        row[t] = evaluate_accuracy(model, stream.tasks[t].test,
                                   stream.tasks[t].classes);
      }
    });
  }
  for (std::thread& th : pool) th.join();
  return row;
}

}  // namespace

const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adaptive_decoupled";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adaptive_decoupled") return OptimizerKind::adaptive_decoupled;
  throw ConfigError("optimizer", "unknown optimizer '" + name + "'");
}

double RunConfig::epsilon_w_for(int layer) const {
  auto it = epsilon_w_per_layer.find(layer);
  return it == epsilon_w_per_layer.end() ? epsilon_w : it->second;
}

int RunConfig::r_for(int layer) const {
  auto it = r_per_layer.find(layer);
  return it == r_per_layer.end() ? r : it->second;
}

void RunConfig::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(epsilon_w)) throw ConfigError("epsilon_w", "must lie in (0,1)");
  if (!in_unit(epsilon_f)) throw ConfigError("epsilon_f", "must lie in (0,1)");
  for (const auto& [layer, value] : epsilon_w_per_layer) {
    if (!in_unit(value)) {
      throw ConfigError("epsilon_w_per_layer",
                        "override for layer " + std::to_string(layer) +
                            " must lie in (0,1)");
    }
  }
  if (r < 1) throw ConfigError("r", "must be >= 1");
  for (const auto& [layer, value] : r_per_layer) {
    if (value < 1) {
      throw ConfigError("r_per_layer", "override for layer " +
                                           std::to_string(layer) +
                                           " must be >= 1");
    }
  }
  if (alpha <= 0.0) throw ConfigError("alpha", "must be positive");
  if (lr <= 0.0) throw ConfigError("lr", "must be positive");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (epochs_per_task < 0) throw ConfigError("epochs_per_task", "must be >= 0");
  if (feature_sample_size < 1) {
    throw ConfigError("feature_sample_size", "must be >= 1");
  }
  if (grad_init_batches < 1) {
    throw ConfigError("grad_init_batches", "must be >= 1");
  }
}

RunResult run_continual(const RunConfig& config, const TaskStream& stream,
                        const ModelSpec& model_spec, int threads,
                        const TrainerHooks* hooks) {
  config.validate();
  if (stream.tasks.empty()) {
    throw ConfigError("stream", "task stream is empty");
  }

  RunResult result;
  LinearModel model = make_model(model_spec);
  const int n_tasks = static_cast<int>(stream.tasks.size());

  // Stream/model compatibility is checked here, on the calling thread;
  // evaluation later fans out across workers where a throw would terminate.
  const std::size_t input_width = model.layers.front().weight.rows();
  const std::size_t head_width = model.layers.back().weight.cols();
  for (const Task& task : stream.tasks) {
    if (task.train.inputs.cols() != input_width ||
        task.test.inputs.cols() != input_width) {
      throw ConfigError("model.dims", "task '" + task.name + "' has width " +
                                          std::to_string(task.train.inputs.cols()) +
                                          ", model expects " +
                                          std::to_string(input_width));
    }
    if (static_cast<std::size_t>(task.classes) > head_width) {
      throw ConfigError("model.dims", "task '" + task.name + "' declares " +
                                          std::to_string(task.classes) +
                                          " classes, head emits " +
                                          std::to_string(head_width));
    }
    if (task.train.size() == 0 || task.test.size() == 0) {
      throw ConfigError("stream", "task '" + task.name + "' has an empty split");
    }
  }

  result.zero_shot = evaluate_all(model, stream, threads);
  result.grid.n_tasks = n_tasks;

  // Per-layer protected subspaces. The principal part comes from the
  // initial weights; variants that never consult it get empty placeholders.
  std::map<int, UnifiedSubspace> subspaces;
  const bool wants_subspace = uses_principal_subspace(config.variant) ||
                              maintains_task_directions(config.variant);
  for (int layer : model.adapted_layers) {
    const DenseMatrix& w = model.layers[static_cast<std::size_t>(layer)].weight;
    if (wants_subspace) {
      subspaces.emplace(layer, make_unified(extract_principal(
                                   w, config.epsilon_w_for(layer))));
    } else {
      subspaces.emplace(layer, UnifiedSubspace::empty(w.rows()));
    }
  }

  for (int stage = 0; stage < n_tasks; ++stage) {
    const Task& task = stream.tasks[static_cast<std::size_t>(stage)];
    if (hooks && hooks->before_task) hooks->before_task(stage, model);

    const std::size_t n_train = task.train.size();
    const std::size_t batch =
        std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                              n_train);
    std::vector<std::size_t> first_epoch_order =
        epoch_permutation(n_train, config, stage, 0);

    // First-step gradient at the pre-task weights, averaged over the
    // leading grad_init_batches batches of the first epoch's order.
    std::map<int, DenseMatrix> first_grad;
    {
      const std::size_t n_batches = (n_train + batch - 1) / batch;
      const std::size_t use =
          std::min<std::size_t>(static_cast<std::size_t>(config.grad_init_batches),
                                n_batches);
      for (std::size_t b = 0; b < use; ++b) {
        const std::size_t first = b * batch;
        const std::size_t count = std::min(batch, n_train - first);
        const LossGrads lg = loss_and_grads(
            model, take_rows(task.train, first_epoch_order, first, count));
        for (const auto& [layer, grad] : lg.weight_grads) {
          auto it = first_grad.find(layer);
          if (it == first_grad.end()) {
            first_grad.emplace(layer, grad);
          } else {
            add_scaled_in_place(it->second, grad, 1.0);
          }
        }
      }
      for (auto& [layer, grad] : first_grad) {
        (void)layer;
        for (double& v : grad.data()) v /= static_cast<double>(use);
      }
    }

    for (int layer : model.adapted_layers) {
      Rng init_rng(mix_seed({config.seed, kTagInit,
                             static_cast<std::uint64_t>(stage),
                             static_cast<std::uint64_t>(layer)}));
      KeepLoRAAdapter adapter = init_from_gradient(
          first_grad.at(layer), subspaces.at(layer), config.r_for(layer),
          config.alpha, config.variant, init_rng);
      shift_base(model.layers[static_cast<std::size_t>(layer)].weight, adapter);
      model.adapters[layer] = std::move(adapter);
    }
    if (hooks && hooks->after_shift) hooks->after_shift(stage, model);

    // Optimizer state is fresh per task.
    std::map<int, AdamWState> adam_b;
    std::map<int, AdamWState> adam_a;
    const AdamWSettings adam_settings;

    for (int epoch = 0; epoch < config.epochs_per_task; ++epoch) {
      const std::vector<std::size_t> order =
          epoch == 0 ? first_epoch_order
                     : epoch_permutation(n_train, config, stage, epoch);
      for (std::size_t first = 0; first < n_train; first += batch) {
        const std::size_t count = std::min(batch, n_train - first);
        const LossGrads lg =
            loss_and_grads(model, take_rows(task.train, order, first, count));
        if (!std::isfinite(lg.loss)) {
          throw NumericalError(
              "run_continual: loss diverged at task " +
              std::to_string(stage + 1) + ", epoch " +
              std::to_string(epoch + 1) + ", batch " +
              std::to_string(first / batch + 1));
        }
        for (int layer : model.adapted_layers) {
          KeepLoRAAdapter& adapter = model.adapters.at(layer);
          const DenseMatrix& g_w = lg.weight_grads.at(layer);
          if (config.optimizer == OptimizerKind::sgd) {
            if (trains_a(config.variant)) {
              // Simultaneous update: both factor gradients taken at the
              // current point before either moves.
              DenseMatrix grad_b =
                  scaled(multiply_at_b(adapter.a, g_w), adapter.scaling());
              DenseMatrix grad_a =
                  scaled(multiply_a_bt(g_w, adapter.b), adapter.scaling());
              add_scaled_in_place(adapter.b, grad_b, -config.lr);
              add_scaled_in_place(adapter.a, grad_a, -config.lr);
            } else {
              sgd_step_b(adapter, g_w, config.lr);
            }
          } else {
            DenseMatrix grad_b =
                scaled(multiply_at_b(adapter.a, g_w), adapter.scaling());
            if (trains_a(config.variant)) {
              DenseMatrix grad_a =
                  scaled(multiply_a_bt(g_w, adapter.b), adapter.scaling());
              adamw_step(adapter.b, grad_b, adam_b[layer], config.lr,
                         adam_settings);
              adamw_step(adapter.a, grad_a, adam_a[layer], config.lr,
                         adam_settings);
            } else {
              adamw_step(adapter.b, grad_b, adam_b[layer], config.lr,
                         adam_settings);
            }
          }
        }
      }
    }

    // Merge, snapshot, then retire the adapters.
    StageSnapshot snapshot;
    for (int layer : model.adapted_layers) {
      KeepLoRAAdapter& adapter = model.adapters.at(layer);
      model.layers[static_cast<std::size_t>(layer)].weight = merge(adapter);
      snapshot.adapters[layer] =
          AdapterSnapshot{adapter.a, adapter.b, adapter.alpha, adapter.rank};
    }
    model.adapters.clear();

    if (maintains_task_directions(config.variant)) {
      for (int layer : model.adapted_layers) {
        const DenseMatrix features = collect_layer_inputs(
            model, task.train, layer,
            static_cast<std::size_t>(config.feature_sample_size));
        UnifiedSubspace& subspace = subspaces.at(layer);
        const TaskDirectionsUpdate update =
            extract_task_directions(features, subspace, config.epsilon_f);
        append_task_directions(subspace, update);
      }
    }

    snapshot.model = model;
    snapshot.subspaces = subspaces;
    result.stages.push_back(std::move(snapshot));
    result.grid.a.push_back(evaluate_all(model, stream, threads));
  }

  result.final_model = std::move(model);
  return result;
}

std::map<InitVariant, RunResult> run_ablation_ladder(
    const RunConfig& config, const TaskStream& stream,
    const ModelSpec& model_spec, int threads) {
  std::map<InitVariant, RunResult> results;
  for (InitVariant variant :
       {InitVariant::vanilla_lora, InitVariant::frozen_random_a,
        InitVariant::grad_only, InitVariant::grad_minus_wp,
        InitVariant::grad_minus_m, InitVariant::keeplora}) {
    RunConfig variant_config = config;
    variant_config.variant = variant;
    results.emplace(variant,
                    run_continual(variant_config, stream, model_spec, threads));
  }
  return results;
}

double backward_forgetting(const AccuracyGrid& grid) {
  if (grid.n_tasks < 2) return 0.0;
  const std::size_t last = grid.a.size() - 1;
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < grid.a.size(); ++t) {
    sum += grid.a[t][t] - grid.a[last][t];
  }
  return sum / static_cast<double>(grid.a.size() - 1);
}

}  // namespace keeplora
