#include "keeplora/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keeplora/errors.hpp"
#include "keeplora/linalg.hpp"

namespace keeplora {

MetricReport compute_metrics(const AccuracyGrid& grid) {
  const std::size_t n = static_cast<std::size_t>(grid.n_tasks);
  if (n == 0 || grid.a.size() != n) {
    throw ShapeError("compute_metrics: grid must hold one row per task, got " +
                     std::to_string(grid.a.size()) + " rows for " +
                     std::to_string(n) + " tasks");
  }
  std::string missing;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.a[i].size() != n) {
      missing += " stage " + std::to_string(i + 1) + " has " +
                 std::to_string(grid.a[i].size()) + " cells;";
    }
  }
  if (!missing.empty()) {
    throw ShapeError("compute_metrics: incomplete grid:" + missing);
  }

  MetricReport report;
  report.per_task.resize(n);
  double transfer_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    TaskMetrics& tm = report.per_task[t];
    if (t >= 1) {
      double sum = 0.0;
      for (std::size_t i = 0; i < t; ++i) sum += grid.a[i][t];
      tm.transfer = sum / static_cast<double>(t);
      transfer_sum += *tm.transfer;
    }
    double avg = 0.0;
    for (std::size_t i = 0; i < n; ++i) avg += grid.a[i][t];
    tm.average = avg / static_cast<double>(n);
    tm.last = grid.a[n - 1][t];
    report.average_mean += tm.average;
    report.last_mean += tm.last;
  }
  report.average_mean /= static_cast<double>(n);
  report.last_mean /= static_cast<double>(n);
  if (n >= 2) {
    report.transfer_mean = transfer_sum / static_cast<double>(n - 1);
  }
  return report;
}

InterferenceGrid interference_heatmap(const std::vector<StageSnapshot>& stages,
                                      const TaskStream& stream) {
  const std::size_t n = stream.tasks.size();
  if (stages.size() != n) {
    throw ShapeError("interference_heatmap: have " +
                     std::to_string(stages.size()) + " checkpoints for " +
                     std::to_string(n) + " stages");
  }

  InterferenceGrid grid;
  grid.norms.assign(n, std::vector<double>(n, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    const StageSnapshot& stage = stages[i];
    if (stage.adapters.empty()) {
      throw ShapeError("interference_heatmap: checkpoint for stage " +
                       std::to_string(i + 1) + " is missing adapters");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const Batch& test = stream.tasks[j].test;
      double layer_mean = 0.0;
      for (const auto& [layer, adapter] : stage.adapters) {
        // Layer inputs come from the stage-i merged model.
        const DenseMatrix inputs =
            collect_layer_inputs(stage.model, test, layer, test.size());
        const double scale =
            adapter.alpha / static_cast<double>(adapter.rank);
        const DenseMatrix outputs = scaled(
            multiply(multiply_at_b(inputs, adapter.a), adapter.b), scale);
        // outputs: n_samples x d_out; mean of per-sample row norms.
        double sample_mean = 0.0;
        for (std::size_t s = 0; s < outputs.rows(); ++s) {
          double norm_sq = 0.0;
          for (std::size_t c = 0; c < outputs.cols(); ++c)
            norm_sq += outputs(s, c) * outputs(s, c);
          sample_mean += std::sqrt(norm_sq);
        }
        layer_mean += sample_mean / static_cast<double>(outputs.rows());
      }
      grid.norms[i][j] = layer_mean / static_cast<double>(stage.adapters.size());
    }
  }

  double peak = 0.0;
  for (const auto& row : grid.norms)
    for (double v : row) peak = std::max(peak, v);
  if (peak > 0.0) {
    for (auto& row : grid.norms)
      for (double& v : row) v /= peak;
  }
  grid.column_means.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double v : grid.norms[i]) sum += v;
    grid.column_means[i] = sum / static_cast<double>(n);
  }
  return grid;
}

std::vector<SpectraPoint> spectra_analysis(const DenseMatrix& w,
                                           const std::vector<Task>& tasks,
                                           const std::vector<int>& ks) {
  const std::size_t min_dim = std::min(w.rows(), w.cols());
  for (int k : ks) {
    if (k < 1 || static_cast<std::size_t>(k) > min_dim) {
      throw ShapeError("spectra_analysis: k = " + std::to_string(k) +
                       " outside [1," + std::to_string(min_dim) + "]");
    }
  }
  const SvdResult decomposition = svd(w);

  std::vector<SpectraPoint> points;
  for (int k : ks) {
    DenseMatrix truncated(w.rows(), w.cols());
    for (int c = 0; c < k; ++c) {
      const double sigma = decomposition.s[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < w.rows(); ++i) {
        const double ui = decomposition.u(i, static_cast<std::size_t>(c));
        if (ui == 0.0) continue;
        for (std::size_t j = 0; j < w.cols(); ++j)
          truncated(i, j) += sigma * ui * decomposition.v(j, static_cast<std::size_t>(c));
      }
    }
    for (const Task& task : tasks) {
      // Single linear map scored like a model head.
      const DenseMatrix logits = multiply(task.test.inputs, truncated);
      std::size_t correct = 0;
      for (std::size_t s = 0; s < task.test.size(); ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < static_cast<std::size_t>(task.classes); ++c)
          if (logits(s, c) > logits(s, best)) best = c;
        if (static_cast<int>(best) == task.test.labels[s]) ++correct;
      }
      points.push_back(SpectraPoint{
          k, task.name,
          static_cast<double>(correct) / static_cast<double>(task.test.size())});
    }
  }
  return points;
}

}  // namespace keeplora
