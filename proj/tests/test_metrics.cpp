#include <doctest.h>

#include <cmath>

#include "keeplora/errors.hpp"
#include "keeplora/metrics.hpp"
#include "keeplora/rng.hpp"
#include "keeplora/tasks.hpp"
#include "test_support.hpp"

using namespace keeplora;

namespace {

AccuracyGrid constant_grid(int n, double value) {
  AccuracyGrid grid;
  grid.n_tasks = n;
  grid.a.assign(n, std::vector<double>(n, value));
  return grid;
}

GaussianStreamSpec tiny_stream_spec() {
  GaussianStreamSpec spec;
  spec.seed = 4;
  spec.n_tasks = 3;
  spec.d_in = 16;
  spec.classes_per_task = 3;
  spec.samples_per_class = 40;
  spec.subspace_overlap = 0.25;
  return spec;
}

ModelSpec tiny_model_spec() {
  ModelSpec spec;
  spec.dims = {16, 24, 3};
  spec.activation = Activation::tanh;
  spec.adapted_layers = {0};
  spec.init_seed = 7;
  return spec;
}

double mean_off_diagonal(const InterferenceGrid& grid) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < grid.norms.size(); ++i) {
    for (std::size_t j = 0; j < grid.norms[i].size(); ++j) {
      if (i == j) continue;
      sum += grid.norms[i][j];
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("a constant grid maps every metric to that constant") {
  const MetricReport report = compute_metrics(constant_grid(4, 0.5));
  for (std::size_t t = 0; t < 4; ++t) {
    if (t > 0) CHECK(*report.per_task[t].transfer == 0.5);
    CHECK(report.per_task[t].average == 0.5);
    CHECK(report.per_task[t].last == 0.5);
  }
  CHECK(*report.transfer_mean == 0.5);
  CHECK(report.average_mean == 0.5);
  CHECK(report.last_mean == 0.5);
}

TEST_CASE("per-column arithmetic on reference accuracy columns") {
  // An 11-stage column whose first entry is the only pre-training
  // evaluation: transfer is exactly that entry.
  const std::vector<double> caltech = {84.6, 97.0, 96.8, 96.7, 96.7, 97.0,
                                       96.8, 96.7, 96.7, 96.7, 96.8};
  const std::vector<double> aircraft = {59.0, 58.1, 56.0, 55.9, 55.7, 55.6,
                                        54.7, 54.3, 54.6, 54.2, 53.2};
  AccuracyGrid grid;
  grid.n_tasks = 11;
  grid.a.assign(11, std::vector<double>(11, 0.0));
  for (std::size_t i = 0; i < 11; ++i) {
    grid.a[i][0] = aircraft[i] / 100.0;
    grid.a[i][1] = caltech[i] / 100.0;
  }
  const MetricReport report = compute_metrics(grid);
  CHECK(std::abs(*report.per_task[1].transfer * 100.0 - 84.6) <= 1e-12);
  CHECK(std::abs(report.per_task[1].average * 100.0 - 95.7) <= 0.05);
  CHECK(std::abs(report.per_task[1].last * 100.0 - 96.8) <= 1e-12);
  CHECK(std::abs(report.per_task[0].average * 100.0 - 55.6) <= 0.05);
  CHECK(std::abs(report.per_task[0].last * 100.0 - 53.2) <= 1e-12);
}

TEST_CASE("metric arithmetic matches a direct re-summation") {
  Rng rng(17);
  AccuracyGrid grid;
  grid.n_tasks = 6;
  grid.a.assign(6, std::vector<double>(6));
  for (auto& row : grid.a)
    for (double& v : row) v = rng.uniform();
  const MetricReport report = compute_metrics(grid);

  for (std::size_t t = 0; t < 6; ++t) {
    double average = 0.0;
    for (std::size_t i = 0; i < 6; ++i) average += grid.a[i][t];
    average /= 6.0;
    CHECK(std::abs(report.per_task[t].average - average) <= 1e-12);
    if (t > 0) {
      double transfer = 0.0;
      for (std::size_t i = 0; i < t; ++i) transfer += grid.a[i][t];
      transfer /= static_cast<double>(t);
      CHECK(std::abs(*report.per_task[t].transfer - transfer) <= 1e-12);
    }
    CHECK(report.per_task[t].last == grid.a[5][t]);
  }
}

TEST_CASE("appending a duplicate final stage shifts Average but not Last") {
  Rng rng(23);
  AccuracyGrid grid;
  grid.n_tasks = 4;
  grid.a.assign(4, std::vector<double>(4));
  for (auto& row : grid.a)
    for (double& v : row) v = rng.uniform();
  const MetricReport before = compute_metrics(grid);

  // The duplicated grid is 5 stages x 4 tasks; pad a fifth task column with
  // the same per-stage values so the grid stays square, then compare only
  // the original four tasks.
  AccuracyGrid padded;
  padded.n_tasks = 5;
  padded.a.assign(5, std::vector<double>(5));
  for (std::size_t i = 0; i < 5; ++i) {
    const std::vector<double>& source = grid.a[std::min<std::size_t>(i, 3)];
    for (std::size_t t = 0; t < 4; ++t) padded.a[i][t] = source[t];
    padded.a[i][4] = 0.0;
  }
  const MetricReport after = compute_metrics(padded);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(after.per_task[t].last == before.per_task[t].last);
    // New average re-weights the duplicated final row by exactly 1/(n+1).
    const double expected =
        (before.per_task[t].average * 4.0 + before.per_task[t].last) / 5.0;
    CHECK(std::abs(after.per_task[t].average - expected) <= 1e-12);
  }
}

TEST_CASE("incomplete grids are reported with their missing cells") {
  AccuracyGrid grid = constant_grid(3, 0.5);
  grid.a[1].pop_back();
  CHECK_THROWS_WITH_AS(compute_metrics(grid), doctest::Contains("stage 2"),
                       ShapeError);
}

TEST_CASE("untrained adapters with zero B give an all-zero heatmap") {
  const TaskStream stream = gen_gaussian_tasks(tiny_stream_spec());
  RunConfig config;
  config.variant = InitVariant::frozen_random_a;
  config.epochs_per_task = 0;
  config.lr = 0.02;
  const RunResult result = run_continual(config, stream, tiny_model_spec());
  const InterferenceGrid grid = interference_heatmap(result.stages, stream);
  for (const auto& row : grid.norms)
    for (double v : row) CHECK(v == 0.0);
  for (double v : grid.column_means) CHECK(v == 0.0);
}

TEST_CASE("heatmaps require one checkpoint per training stage") {
  const TaskStream stream = gen_gaussian_tasks(tiny_stream_spec());
  RunConfig config;
  config.variant = InitVariant::keeplora;
  config.lr = 0.02;
  config.epochs_per_task = 1;
  RunResult result = run_continual(config, stream, tiny_model_spec());
  result.stages.pop_back();
  CHECK_THROWS_WITH_AS(interference_heatmap(result.stages, stream),
                       doctest::Contains("checkpoints"), ShapeError);
}

TEST_CASE("adapter output vanishes on rows inside span(Wp)") {
  const TaskStream stream = gen_gaussian_tasks(tiny_stream_spec());
  RunConfig config;
  config.variant = InitVariant::keeplora;
  config.lr = 0.02;
  config.epochs_per_task = 6;
  const RunResult result = run_continual(config, stream, tiny_model_spec());

  for (const StageSnapshot& stage : result.stages) {
    for (const auto& [layer, adapter] : stage.adapters) {
      const OrthonormalBasis& w_p =
          stage.subspaces.at(layer).principal.basis;
      Rng rng(5);
      const DenseMatrix coeffs =
          test_support::random_matrix(w_p.count(), 10, rng);
      const DenseMatrix rows = transpose(multiply(w_p.basis(), coeffs));
      const DenseMatrix outputs =
          multiply(multiply(rows, adapter.a), adapter.b);
      CHECK(max_abs(outputs) * adapter.alpha / adapter.rank <= 1e-10);
    }
  }
}

TEST_CASE("interference grid is normalized and ordered across variants") {
  const TaskStream stream = gen_gaussian_tasks(tiny_stream_spec());
  RunConfig config;
  config.lr = 0.02;
  config.epochs_per_task = 8;
  config.seed = 3;

  config.variant = InitVariant::keeplora;
  const RunResult keep = run_continual(config, stream, tiny_model_spec());
  config.variant = InitVariant::vanilla_lora;
  const RunResult vanilla = run_continual(config, stream, tiny_model_spec());

  const InterferenceGrid keep_grid = interference_heatmap(keep.stages, stream);
  const InterferenceGrid vanilla_grid =
      interference_heatmap(vanilla.stages, stream);

  double keep_peak = 0.0, vanilla_peak = 0.0;
  for (const auto& row : keep_grid.norms)
    for (double v : row) keep_peak = std::max(keep_peak, v);
  for (const auto& row : vanilla_grid.norms)
    for (double v : row) vanilla_peak = std::max(vanilla_peak, v);
  CHECK(keep_peak == doctest::Approx(1.0));
  CHECK(vanilla_peak == doctest::Approx(1.0));

  CHECK(mean_off_diagonal(keep_grid) < mean_off_diagonal(vanilla_grid));
}

TEST_CASE("heatmap cells ignore sample order within a task") {
  TaskStream stream = gen_gaussian_tasks(tiny_stream_spec());
  RunConfig config;
  config.variant = InitVariant::keeplora;
  config.lr = 0.02;
  config.epochs_per_task = 4;
  const RunResult result = run_continual(config, stream, tiny_model_spec());
  const InterferenceGrid before = interference_heatmap(result.stages, stream);

  // Reverse the sample order of one task's test split.
  Batch& test = stream.tasks[1].test;
  Batch reversed;
  reversed.inputs = DenseMatrix(test.inputs.rows(), test.inputs.cols());
  reversed.labels.resize(test.labels.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t src = test.size() - 1 - i;
    for (std::size_t j = 0; j < test.inputs.cols(); ++j)
      reversed.inputs(i, j) = test.inputs(src, j);
    reversed.labels[i] = test.labels[src];
  }
  test = reversed;
  const InterferenceGrid after = interference_heatmap(result.stages, stream);
  for (std::size_t i = 0; i < before.norms.size(); ++i)
    for (std::size_t j = 0; j < before.norms[i].size(); ++j)
      CHECK(std::abs(before.norms[i][j] - after.norms[i][j]) <= 1e-12);
}

TEST_CASE("spectra at full rank reproduce the untruncated scores") {
  const PlantedSpectrumModel planted = gen_planted_spectrum_model(3, 16, 4, 4);
  const std::vector<Task> tasks = {planted.general, planted.specific};

  CHECK_THROWS_AS(spectra_analysis(planted.weight, tasks, {0}), ShapeError);
  CHECK_THROWS_AS(spectra_analysis(planted.weight, tasks, {9}), ShapeError);

  const auto points = spectra_analysis(planted.weight, tasks, {4, 8});
  REQUIRE(points.size() == 4);

  // Full-rank truncation is the unmodified linear scorer.
  const auto score = [&](const Task& task) {
    const DenseMatrix logits = multiply(task.test.inputs, planted.weight);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < task.test.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < static_cast<std::size_t>(task.classes); ++j)
        if (logits(i, j) > logits(i, best)) best = j;
      if (static_cast<int>(best) == task.test.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(task.test.size());
  };
  CHECK(points[2].accuracy == score(planted.general));
  CHECK(points[3].accuracy == score(planted.specific));

  // The truncation that keeps only the large-singular-value block preserves
  // the general task and collapses the specific one.
  CHECK(std::abs(points[0].accuracy - points[2].accuracy) <= 0.01);
  CHECK(points[1].accuracy < points[0].accuracy);
  CHECK(points[3].accuracy - points[1].accuracy >= 0.20);
}
