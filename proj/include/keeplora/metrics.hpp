#pragma once

#include <optional>
#include <string>
#include <vector>

#include "keeplora/tasks.hpp"
#include "keeplora/trainer.hpp"

namespace keeplora {

struct TaskMetrics {
  std::optional<double> transfer;  // absent for the first task
  double average = 0.0;
  double last = 0.0;
};

struct MetricReport {
  std::vector<TaskMetrics> per_task;
  std::optional<double> transfer_mean;  // mean over tasks 2..n
  double average_mean = 0.0;
  double last_mean = 0.0;
};

/// Transfer_t = mean of a[i][t] over stages i < t (accuracy on a task before
/// it is trained); Average_t = mean over all stages; Last_t = final-stage
/// accuracy. Requires a fully populated grid.
MetricReport compute_metrics(const AccuracyGrid& grid);

/// norms[i][j]: mean per-sample L2 norm of the stage-i adapter output on
/// task-j test data, averaged over adapted layers and normalized by the grid
/// maximum. column_means[i] is the per-stage mean over all j.
struct InterferenceGrid {
  std::vector<std::vector<double>> norms;
  std::vector<double> column_means;
};

InterferenceGrid interference_heatmap(const std::vector<StageSnapshot>& stages,
                                      const TaskStream& stream);

struct SpectraPoint {
  int k = 0;
  std::string task;
  double accuracy = 0.0;
};

/// Reconstructs w from its top-k singular triplets and scores every task
/// with the truncated linear map (argmax over the task's class columns).
std::vector<SpectraPoint> spectra_analysis(const DenseMatrix& w,
                                           const std::vector<Task>& tasks,
                                           const std::vector<int>& ks);

}  // namespace keeplora
