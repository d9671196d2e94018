// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "keeplora/adapter.hpp"
#include "keeplora/commands.hpp"
#include "keeplora/config.hpp"
#include "keeplora/csv.hpp"
#include "keeplora/metrics.hpp"
#include "keeplora/rng.hpp"
#include "keeplora/tasks.hpp"
#include "keeplora/trainer.hpp"

using namespace keeplora;

namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Shared experiment setup: the repository's golden configuration values.
GaussianStreamSpec default_stream_spec() {
  return GaussianStreamSpec{};  // seed 1, 5 tasks, d_in 32, 4 classes,
                                // 100 per class, overlap 0.25
}

ModelSpec default_model_spec() {
  ModelSpec spec;
  spec.dims = {32, 64, 64, 4};
  spec.activation = Activation::tanh;
  spec.adapted_layers = {0, 1};
  spec.init_seed = 7;
  spec.init_scale = 1.0;
  return spec;
}

RunConfig default_run_config() {
  RunConfig config;
  config.epsilon_w = 0.35;
  config.epsilon_f = 0.8;
  config.r = 8;
  config.alpha = 16.0;
  config.lr = 0.02;
  config.batch_size = 64;
  config.epochs_per_task = 30;
  config.optimizer = OptimizerKind::sgd;
  config.seed = 1;
  return config;
}

// --- criterion 1: frozen-B-step update rule is the projected gradient ----

Outcome check_update_rule_exactness() {
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng(mix_seed({11, static_cast<std::uint64_t>(trial)}));
    const std::size_t d_in = 2 + rng.below(31);
    const std::size_t d_out = 2 + rng.below(31);
    const int r = 1 + static_cast<int>(
        rng.below(std::min<std::size_t>(8, std::min(d_in, d_out))));
    const double alpha = (trial % 2 == 0) ? 1.0 : 16.0;
    const double eta = (trial % 4 < 2) ? 1e-3 : 1e-1;

    KeepLoRAAdapter adapter = init_from_gradient(
        DenseMatrix(d_in, d_out), UnifiedSubspace::empty(d_in), r, alpha,
        InitVariant::frozen_random_a, rng);
    shift_base(random_matrix(d_in, d_out, rng), adapter);

    const DenseMatrix g = random_matrix(d_in, d_out, rng);
    const DenseMatrix b_before = adapter.b;
    sgd_step_b(adapter, g, eta);
    const DenseMatrix delta = scaled(
        multiply(adapter.a, subtract(adapter.b, b_before)), adapter.scaling());

    const double c = eta * alpha * alpha /
                     (static_cast<double>(r) * static_cast<double>(r));
    const DenseMatrix expected =
        scaled(multiply(adapter.a, multiply_at_b(adapter.a, g)), -c);
    const double rel =
        std::sqrt(frobenius_norm_sq(subtract(delta, expected)) /
                  frobenius_norm_sq(expected));
    worst = std::max(worst, rel);
  }
  return Outcome{worst <= 1e-12,
                 "1000 instances, worst relative error " +
                     format_double(worst) + " (tol 1e-12)"};
}

// --- criterion 2: gradient-informed init solves the constrained problem --

Outcome check_init_optimality() {
  double worst_constraint = 0.0;
  double worst_energy_rel = 0.0;
  double worst_margin = 0.0;  // most any random frame beat the init
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(mix_seed({22, static_cast<std::uint64_t>(trial)}));
    const std::size_t d_in = 7 + rng.below(6);   // 7..12
    const std::size_t d_out = 4 + rng.below(9);  // 4..12
    const int r = 1 + static_cast<int>(rng.below(3));
    const std::size_t wp_cols = 1 + rng.below(2);
    const std::size_t m_cols = rng.below(2);

    OrthonormalizeResult frame = orthonormalize_against(
        random_matrix(d_in, wp_cols + m_cols, rng), OrthonormalBasis(d_in));
    DenseMatrix wp(d_in, wp_cols), md(d_in, m_cols);
    for (std::size_t i = 0; i < d_in; ++i) {
      for (std::size_t j = 0; j < wp_cols; ++j)
        wp(i, j) = frame.added.basis()(i, j);
      for (std::size_t j = 0; j < m_cols; ++j)
        md(i, j) = frame.added.basis()(i, wp_cols + j);
    }
    UnifiedSubspace u = make_unified(
        PrincipalSubspace{OrthonormalBasis(d_in, wp), 1.0, wp_cols});
    u.task_dirs.basis = OrthonormalBasis(d_in, md);

    const DenseMatrix g = random_matrix(d_in, d_out, rng);
    const KeepLoRAAdapter adapter =
        init_from_gradient(g, u, r, 16.0, InitVariant::keeplora, rng);

    worst_constraint = std::max(
        worst_constraint, max_abs(multiply_at_b(wp, adapter.a)));
    if (m_cols > 0) {
      worst_constraint = std::max(
          worst_constraint, max_abs(multiply_at_b(md, adapter.a)));
    }

    const DenseMatrix projected = residual_project(g, u);
    const SvdResult d = svd(projected);
    double top = 0.0;
    for (int i = 0; i < adapter.effective_rank; ++i) top += d.s[i] * d.s[i];
    const double captured =
        frobenius_norm_sq(multiply_at_b(adapter.a, projected));
    worst_energy_rel = std::max(
        worst_energy_rel, std::abs(captured - top) / std::max(1.0, top));

    // 10,000 random feasible frames per instance.
    const OrthonormalBasis protected_basis(d_in, frame.added.basis());
    const std::size_t r_size = static_cast<std::size_t>(adapter.effective_rank);
    for (int candidate = 0; candidate < 10000; ++candidate) {
      OrthonormalizeResult sampled = orthonormalize_against(
          random_matrix(d_in, r_size, rng), protected_basis);
      if (sampled.added.count() != r_size) continue;
      const double energy =
          frobenius_norm_sq(multiply_at_b(sampled.added.basis(), projected));
      worst_margin = std::max(worst_margin, energy - captured);
    }
  }
  const bool pass = worst_constraint <= 1e-10 && worst_energy_rel <= 1e-9 &&
                    worst_margin <= 1e-9;
  return Outcome{pass, "200 instances x 10000 frames: constraint " +
                           format_double(worst_constraint) +
                           ", energy rel " + format_double(worst_energy_rel) +
                           ", best challenger margin " +
                           format_double(worst_margin)};
}

// --- criterion 3: shifting the base preserves the forward pass -----------

Outcome check_forward_preservation() {
  Rng input_rng(33);
  const DenseMatrix probes = random_matrix(100, 32, input_rng);
  double worst = 0.0;
  for (InitVariant variant :
       {InitVariant::keeplora, InitVariant::grad_only,
        InitVariant::grad_minus_wp, InitVariant::grad_minus_m,
        InitVariant::frozen_random_a, InitVariant::vanilla_lora}) {
    RunConfig config = default_run_config();
    config.variant = variant;
    config.epochs_per_task = 5;

    std::vector<DenseMatrix> before;
    TrainerHooks hooks;
    hooks.before_task = [&](int, const LinearModel& model) {
      before.push_back(forward(model, probes));
    };
    hooks.after_shift = [&](int stage, const LinearModel& model) {
      worst = std::max(worst, max_abs_diff(forward(model, probes),
                                           before[static_cast<std::size_t>(stage)]));
    };
    run_continual(config, gen_gaussian_tasks(default_stream_spec()),
                  default_model_spec(), 1, &hooks);
  }
  return Outcome{worst <= 1e-12,
                 "6 variants x 5 stages, worst logit deviation " +
                     format_double(worst) + " (tol 1e-12)"};
}

// --- criterion 4: analytic gradients match central differences -----------

Outcome check_gradient_correctness() {
  double worst = 0.0;
  for (std::size_t batch_size : {std::size_t{1}, std::size_t{7}, std::size_t{64}}) {
    LinearModel model = make_model(default_model_spec());
    Rng rng(mix_seed({44, batch_size}));
    Batch batch;
    batch.inputs = random_matrix(batch_size, 32, rng);
    batch.labels.resize(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
      batch.labels[i] = static_cast<int>(rng.below(4));

    const LossGrads lg = loss_and_grads(model, batch);
    const double h = 1e-5;
    for (int layer : model.adapted_layers) {
      DenseMatrix& w = model.layers[static_cast<std::size_t>(layer)].weight;
      const DenseMatrix& analytic = lg.weight_grads.at(layer);
      double diff_sq = 0.0;
      double ref_sq = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
          const double saved = w(i, j);
          w(i, j) = saved + h;
          const double up = loss_and_grads(model, batch).loss;
          w(i, j) = saved - h;
          const double down = loss_and_grads(model, batch).loss;
          w(i, j) = saved;
          const double numeric = (up - down) / (2.0 * h);
          diff_sq += (numeric - analytic(i, j)) * (numeric - analytic(i, j));
          ref_sq += analytic(i, j) * analytic(i, j);
        }
      }
      worst = std::max(worst, std::sqrt(diff_sq / ref_sq));
    }
  }
  return Outcome{worst < 1e-6, "batch sizes {1,7,64}, worst per-layer "
                               "relative error " + format_double(worst) +
                               " (tol 1e-6)"};
}

// --- criterion 5: metric arithmetic on the reference accuracy table ------

Outcome check_metric_arithmetic() {
  // 11-task per-stage accuracy table of the reference continual run, percent.
  const double cells[11][11] = {
      {59.0, 84.6, 68.4, 45.4, 52.2, 71.9, 89.0, 63.8, 91.1, 60.6, 63.6},
      {58.1, 97.0, 69.1, 45.4, 50.8, 71.1, 88.7, 61.8, 91.1, 60.1, 64.8},
      {56.0, 96.8, 87.6, 46.8, 56.3, 68.9, 87.3, 66.3, 90.1, 59.6, 64.7},
      {55.9, 96.7, 87.5, 75.0, 57.9, 69.6, 87.1, 64.7, 90.3, 59.5, 64.6},
      {55.7, 96.7, 87.0, 74.8, 98.4, 69.3, 87.0, 65.2, 90.2, 59.1, 64.6},
      {55.6, 97.0, 86.9, 74.4, 98.4, 93.3, 86.9, 65.0, 90.3, 59.4, 64.3},
      {54.7, 96.8, 86.2, 72.6, 98.3, 92.2, 91.8, 66.7, 89.8, 59.0, 63.8},
      {54.3, 96.7, 85.8, 72.4, 98.1, 91.8, 91.8, 99.5, 89.7, 59.3, 63.8},
      {54.6, 96.7, 85.7, 72.0, 98.2, 91.8, 91.8, 99.5, 94.7, 59.2, 63.8},
      {54.2, 96.7, 85.7, 71.9, 98.1, 91.5, 91.7, 99.5, 94.4, 84.3, 63.7},
      {53.2, 96.8, 85.7, 71.4, 98.1, 90.8, 91.4, 99.6, 94.5, 83.1, 82.0}};
  const double published_transfer[11] = {-1,   84.6, 68.7, 45.9, 54.3, 70.1,
                                         87.7, 64.8, 90.3, 59.5, 64.1};
  const double published_average[11] = {55.6, 95.7, 83.2, 65.6, 82.2, 82.0,
                                        89.5, 77.4, 91.5, 63.9, 65.8};
  const double published_last[11] = {53.2, 96.8, 85.7, 71.4, 98.1, 90.8,
                                     91.4, 99.6, 94.5, 83.1, 82.0};

  AccuracyGrid grid;
  grid.n_tasks = 11;
  grid.a.assign(11, std::vector<double>(11));
  for (int i = 0; i < 11; ++i)
    for (int t = 0; t < 11; ++t) grid.a[i][t] = cells[i][t] / 100.0;
  const MetricReport report = compute_metrics(grid);

  // +1e-9 keeps exact half-rounding boundaries (e.g. a recomputed transfer
  // of 68.75 against a published 68.7) inside the inclusive tolerance.
  const double tol = 0.05 + 1e-9;
  // The source table prints cells rounded to one decimal, so a metric
  // recomputed from it can sit up to 0.1 from the published value; these
  // entries are the ones where that input rounding exceeds tol.
  const double input_rounding_tol = 0.1;
  bool pass = true;
  std::ostringstream detail;
  int tight = 0, rounded = 0;
  for (int t = 0; t < 11; ++t) {
    const double average = report.per_task[t].average * 100.0;
    const double last = report.per_task[t].last * 100.0;
    std::vector<std::pair<double, double>> checks = {
        {average, published_average[t]}, {last, published_last[t]}};
    if (t >= 1) {
      checks.push_back({*report.per_task[t].transfer * 100.0,
                        published_transfer[t]});
    }
    for (const auto& [got, want] : checks) {
      const double deviation = std::abs(got - want);
      if (deviation <= tol) {
        ++tight;
      } else if (deviation <= input_rounding_tol) {
        ++rounded;
      } else {
        pass = false;
        detail << " entry task " << (t + 1) << " off by "
               << format_double(deviation) << ";";
      }
    }
  }
  // Values the criterion names explicitly must sit within the tight band.
  const bool named =
      std::abs(*report.per_task[1].transfer * 100.0 - 84.6) <= tol &&
      std::abs(*report.per_task[2].transfer * 100.0 - 68.7) <= tol &&
      std::abs(report.per_task[0].average * 100.0 - 55.6) <= tol &&
      std::abs(report.per_task[10].last * 100.0 - 82.0) <= tol &&
      std::abs(*report.transfer_mean * 100.0 - 69.0) <= tol &&
      std::abs(report.average_mean * 100.0 - 77.5) <= tol &&
      std::abs(report.last_mean * 100.0 - 86.1) <= tol;
  pass = pass && named;
  detail << (named ? " named entries and aggregates within 0.05;"
                   : " named entry or aggregate out of tolerance;");
  detail << " " << tight << "/32 row entries within 0.05, " << rounded
         << " limited by the table's one-decimal input rounding (<= 0.1)";
  return Outcome{pass, detail.str().substr(1)};
}

// --- criterion 6: per-task weight change avoids the protected bases ------

Outcome check_subspace_confinement() {
  RunConfig config = default_run_config();
  config.variant = InitVariant::keeplora;

  std::vector<LinearModel> pre_task;
  TrainerHooks hooks;
  hooks.before_task = [&pre_task](int, const LinearModel& model) {
    pre_task.push_back(model);
  };
  const RunResult result =
      run_continual(config, gen_gaussian_tasks(default_stream_spec()),
                    default_model_spec(), 1, &hooks);

  double worst = 0.0;
  for (std::size_t t = 0; t < result.stages.size(); ++t) {
    for (const auto& [layer, subspace] : result.stages[t].subspaces) {
      const DenseMatrix change = subtract(
          result.stages[t].model.layers[static_cast<std::size_t>(layer)].weight,
          pre_task[t].layers[static_cast<std::size_t>(layer)].weight);
      worst = std::max(
          worst, max_abs(multiply_at_b(subspace.principal.basis.basis(), change)));
      if (t > 0) {
        const OrthonormalBasis& previous =
            result.stages[t - 1].subspaces.at(layer).task_dirs.basis;
        if (!previous.empty()) {
          worst = std::max(worst,
                           max_abs(multiply_at_b(previous.basis(), change)));
        }
      }
    }
  }
  return Outcome{worst <= 1e-9, "5 tasks x 2 layers, worst overlap " +
                                    format_double(worst) + " (tol 1e-9)"};
}

// --- criterion 7: ablation ordering over seeds ----------------------------

Outcome check_ablation_ordering() {
  const TaskStream stream = gen_gaussian_tasks(default_stream_spec());
  std::map<InitVariant, double> last_sum, average_sum, forgetting_sum;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    for (InitVariant variant :
         {InitVariant::keeplora, InitVariant::grad_only,
          InitVariant::vanilla_lora}) {
      RunConfig config = default_run_config();
      config.seed = seed;
      config.variant = variant;
      const RunResult result =
          run_continual(config, stream, default_model_spec());
      const MetricReport report = compute_metrics(result.grid);
      last_sum[variant] += report.last_mean;
      average_sum[variant] += report.average_mean;
      forgetting_sum[variant] += backward_forgetting(result.grid);
    }
  }
  const bool pass =
      last_sum[InitVariant::keeplora] > last_sum[InitVariant::grad_only] &&
      last_sum[InitVariant::grad_only] >= last_sum[InitVariant::vanilla_lora] &&
      average_sum[InitVariant::keeplora] > average_sum[InitVariant::grad_only] &&
      average_sum[InitVariant::grad_only] >=
          average_sum[InitVariant::vanilla_lora] &&
      forgetting_sum[InitVariant::keeplora] <
          forgetting_sum[InitVariant::vanilla_lora];
  std::ostringstream detail;
  detail << "mean last " << format_double(last_sum[InitVariant::keeplora] / 3)
         << " > " << format_double(last_sum[InitVariant::grad_only] / 3)
         << " >= " << format_double(last_sum[InitVariant::vanilla_lora] / 3)
         << "; mean forgetting "
         << format_double(forgetting_sum[InitVariant::keeplora] / 3) << " < "
         << format_double(forgetting_sum[InitVariant::vanilla_lora] / 3);
  return Outcome{pass, detail.str()};
}

// --- criterion 8: interference norms ---------------------------------------

Outcome check_interference_ordering() {
  const TaskStream stream = gen_gaussian_tasks(default_stream_spec());
  bool ordered = true;
  double worst_protected = 0.0;
  std::ostringstream detail;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RunConfig config = default_run_config();
    config.seed = seed;

    config.variant = InitVariant::keeplora;
    const RunResult keep = run_continual(config, stream, default_model_spec());
    config.variant = InitVariant::vanilla_lora;
    const RunResult vanilla =
        run_continual(config, stream, default_model_spec());

    const auto off_diag_mean = [](const InterferenceGrid& grid) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < grid.norms.size(); ++i)
        for (std::size_t j = 0; j < grid.norms[i].size(); ++j)
          if (i != j) {
            sum += grid.norms[i][j];
            ++count;
          }
      return sum / static_cast<double>(count);
    };
    const double keep_mean =
        off_diag_mean(interference_heatmap(keep.stages, stream));
    const double vanilla_mean =
        off_diag_mean(interference_heatmap(vanilla.stages, stream));
    ordered = ordered && keep_mean < vanilla_mean;
    detail << " seed " << seed << ": " << format_double(keep_mean) << " vs "
           << format_double(vanilla_mean) << ";";

    // Adapter output on rows confined to span(Wp).
    for (const StageSnapshot& stage : keep.stages) {
      for (const auto& [layer, adapter] : stage.adapters) {
        const OrthonormalBasis& w_p = stage.subspaces.at(layer).principal.basis;
        Rng rng(mix_seed({88, seed, static_cast<std::uint64_t>(layer)}));
        const DenseMatrix rows = transpose(
            multiply(w_p.basis(), random_matrix(w_p.count(), 20, rng)));
        const DenseMatrix outputs = scaled(
            multiply(multiply(rows, adapter.a), adapter.b),
            adapter.alpha / adapter.rank);
        worst_protected = std::max(worst_protected, max_abs(outputs));
      }
    }
  }
  detail << " worst protected-input output " << format_double(worst_protected);
  return Outcome{ordered && worst_protected <= 1e-10, detail.str().substr(1)};
}

// --- criterion 9: spectral truncation on the planted construction --------

Outcome check_spectral_truncation() {
  // Construction parameters mirror configs/golden.json's spectra section.
  const int d = 16, general_rank = 4, specific_count = 4;
  const double general_drop_max = 2.0;    // accuracy points
  const double specific_drop_min = 20.0;  // accuracy points
  const PlantedSpectrumModel planted =
      gen_planted_spectrum_model(3, d, general_rank, specific_count);
  const auto points =
      spectra_analysis(planted.weight, {planted.general, planted.specific},
                       {general_rank, general_rank + specific_count});
  double general_at_k = -1, general_full = -1, specific_at_k = -1,
         specific_full = -1;
  for (const SpectraPoint& p : points) {
    if (p.task == "general") {
      (p.k == general_rank ? general_at_k : general_full) = p.accuracy * 100.0;
    } else {
      (p.k == general_rank ? specific_at_k : specific_full) = p.accuracy * 100.0;
    }
  }
  const bool pass =
      (specific_full - specific_at_k) >= specific_drop_min &&
      std::abs(general_full - general_at_k) <= general_drop_max;
  std::ostringstream detail;
  detail << "specific " << format_double(specific_full) << " -> "
         << format_double(specific_at_k) << " (needs drop >= 20); general "
         << format_double(general_full) << " -> "
         << format_double(general_at_k) << " (stays within 2)";
  return Outcome{pass, detail.str()};
}

// --- criterion 10: byte determinism through the CLI -----------------------

Outcome check_determinism() {
  const fs::path dir = fs::temp_directory_path() / "keeplora_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string config = std::string(KEEPLORA_REPO) + "/configs/golden.json";

  const auto run_with = [&](const std::string& out, int threads) {
    std::ostringstream command;
    command << KEEPLORA_BIN << " run --config " << config << " --out "
            << (dir / out).string() << " --threads " << threads
            << " > /dev/null 2>&1";
    return std::system(command.str().c_str());
  };
  if (run_with("a", 1) != 0 || run_with("b", 4) != 0) {
    return Outcome{false, "golden run exited nonzero"};
  }

  const auto read_bytes = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };
  std::vector<std::string> names = {"grid.csv", "metrics.csv"};
  for (int stage = 1; stage <= 5; ++stage) {
    char name[48];
    std::snprintf(name, sizeof name, "checkpoint_stage_%02d.klra", stage);
    names.push_back(name);
  }
  for (const std::string& name : names) {
    if (read_bytes(dir / "a" / name) != read_bytes(dir / "b" / name)) {
      return Outcome{false, name + " differs between --threads 1 and 4"};
    }
  }
  return Outcome{true, "grid, metrics, and 5 checkpoints byte-identical "
                       "across --threads 1 and 4"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double time_limit_s;  // 0: no stated limit
  };
  const std::vector<Criterion> criteria = {
      {"frozen-step update rule exactness", check_update_rule_exactness, 10.0},
      {"gradient-informed init optimality", check_init_optimality, 120.0},
      {"forward-pass preservation after base shift",
       check_forward_preservation, 0.0},
      {"analytic gradient correctness", check_gradient_correctness, 0.0},
      {"metric arithmetic on the reference table", check_metric_arithmetic,
       0.0},
      {"subspace confinement of per-task updates", check_subspace_confinement,
       0.0},
      {"ablation ordering across seeds", check_ablation_ordering, 300.0},
      {"interference-norm ordering", check_interference_ordering, 0.0},
      {"spectral truncation splits general from specific",
       check_spectral_truncation, 0.0},
      {"byte determinism at any thread count", check_determinism, 0.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_time =
        criteria[i].time_limit_s == 0.0 || elapsed < criteria[i].time_limit_s;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%s] %2zu/10 %s (%.2fs%s) :: %s\n", pass ? "PASS" : "FAIL",
                i + 1, criteria[i].name, elapsed,
                in_time ? "" : ", over time limit", outcome.detail.c_str());
  }
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
  } else {
    std::printf("all 10 criteria passed\n");
  }
  return failures;
}
