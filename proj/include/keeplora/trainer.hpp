#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "keeplora/adapter.hpp"
#include "keeplora/model.hpp"
#include "keeplora/subspace.hpp"
#include "keeplora/tasks.hpp"

namespace keeplora {

enum class OptimizerKind { sgd, adaptive_decoupled };

const char* to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

struct RunConfig {
  double epsilon_w = 0.35;
  double epsilon_f = 0.80;
  int r = 8;
  double alpha = 16.0;
  double lr = 1e-3;
  int batch_size = 64;
  int epochs_per_task = 10;
  OptimizerKind optimizer = OptimizerKind::sgd;
  InitVariant variant = InitVariant::keeplora;
  std::uint64_t seed = 1;
  int feature_sample_size = 512;
  int grad_init_batches = 1;
  // Optional per-adapted-layer overrides; empty means the globals apply.
  std::map<int, double> epsilon_w_per_layer;
  std::map<int, int> r_per_layer;

  double epsilon_w_for(int layer) const;
  int r_for(int layer) const;
  void validate() const;  // throws ConfigError naming the bad field
};

/// a[stage][task]: accuracy on every task after each training stage,
/// including not-yet-seen tasks. Stages and tasks are 0-based here; reports
/// use 1-based indices.
struct AccuracyGrid {
  std::vector<std::vector<double>> a;
  int n_tasks = 0;
};

struct AdapterSnapshot {
  DenseMatrix a;
  DenseMatrix b;
  double alpha = 0.0;
  int rank = 0;
};

/// Everything the analyses need about the model right after one task's
/// merge: the adapter-free merged model plus the per-layer adapter factors
/// and unified-subspace state at that point.
struct StageSnapshot {
  LinearModel model;
  std::map<int, AdapterSnapshot> adapters;
  std::map<int, UnifiedSubspace> subspaces;
};

struct RunResult {
  AccuracyGrid grid;
  std::vector<double> zero_shot;  // initial model on all tasks
  std::vector<StageSnapshot> stages;
  LinearModel final_model;
};

/// Observation points used by verification code; both fire once per task.
struct TrainerHooks {
  std::function<void(int stage, const LinearModel&)> before_task;
  std::function<void(int stage, const LinearModel&)> after_shift;
};

/// Runs the full procedure over the stream: per task, gradient-informed
/// adapter init, base shift, B-only training (A too for vanilla_lora),
/// merge, feature-direction extraction for the subspace-maintaining
/// variants, then evaluation on every task. Deterministic for a fixed
/// config at any thread count.
RunResult run_continual(const RunConfig& config, const TaskStream& stream,
                        const ModelSpec& model_spec, int threads = 1,
                        const TrainerHooks* hooks = nullptr);

/// Same stream and seeds across all six init variants.
std::map<InitVariant, RunResult> run_ablation_ladder(
    const RunConfig& config, const TaskStream& stream,
    const ModelSpec& model_spec, int threads = 1);

/// Mean over t < n of a[t][t] - a[n-1][t]: how much the tasks seen earlier
/// lost by the end of the sequence.
double backward_forgetting(const AccuracyGrid& grid);

}  // namespace keeplora
