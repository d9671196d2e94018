#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "keeplora/model.hpp"

namespace keeplora {

/// One labeled classification task with disjoint train/test splits.
struct Task {
  std::string name;
  Batch train;
  Batch test;
  int classes = 0;
};

/// Ordered task sequence; regeneration from master_seed is bit-identical.
struct TaskStream {
  std::vector<Task> tasks;
  std::uint64_t master_seed = 0;
};

struct GaussianStreamSpec {
  std::uint64_t seed = 1;
  int n_tasks = 5;
  int d_in = 32;
  int classes_per_task = 4;
  int samples_per_class = 100;
  double subspace_overlap = 0.25;  // 0: orthogonal task subspaces, 1: identical
  double noise_sigma = 0.3;
  double mean_norm = 3.0;
};

/// Gaussian-blob task: class means drawn inside span(subspace_basis) and
/// scaled to mean_norm, isotropic noise on top. Train and test are sampled
/// from separate seed streams; the test split holds ceil(0.2 * n) per class.
Task gen_gaussian_task(std::uint64_t seed, const DenseMatrix& subspace_basis,
                       int classes, int samples_per_class, double noise_sigma,
                       double mean_norm, std::string name);

/// Exact class means gen_gaussian_task draws for this seed and basis.
std::vector<std::vector<double>> gaussian_class_means(
    std::uint64_t seed, const DenseMatrix& subspace_basis, int classes,
    double mean_norm);

/// The orthonormal class-mean subspace gen_gaussian_tasks assigns to one
/// task of the stream.
DenseMatrix gaussian_task_basis(const GaussianStreamSpec& spec,
                                int task_index);

/// Task stream whose per-task class-mean subspaces share
/// round(overlap * classes_per_task) dimensions; the rest are mutually
/// orthogonal across tasks. Errors when d_in cannot host the requested
/// orthogonal blocks.
TaskStream gen_gaussian_tasks(const GaussianStreamSpec& spec);

/// Weight matrix plus matched evaluation tasks for the spectral-truncation
/// analysis. The matrix routes `general_energy_rank` classes through
/// large-singular-value directions and `specific_direction_count` classes
/// through small ones, so truncating the spectrum selectively destroys the
/// specific task.
struct PlantedSpectrumModel {
  DenseMatrix weight;  // d x (general + specific classes)
  Task general;
  Task specific;
};

PlantedSpectrumModel gen_planted_spectrum_model(std::uint64_t seed, int d,
                                                int general_energy_rank,
                                                int specific_direction_count);

/// Raw numeric table parsed from a CSV file: header row, float feature
/// columns, integer label in the final column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
};

CsvTable load_csv_table(const std::string& path, int declared_classes = 0);
void save_csv_table(const CsvTable& table, const std::string& path);

/// Deterministic 80/20 split: within each class, rows ordered by
/// splitmix64(master_seed ^ row_index) and the first ceil(0.2 * n) become
/// test rows.
Task split_table(const CsvTable& table, std::uint64_t master_seed,
                 std::string name, int declared_classes = 0);

/// One task per file. declared_classes = 0 infers max(label)+1 per file.
TaskStream load_csv_tasks(const std::vector<std::string>& paths,
                          std::uint64_t master_seed, int declared_classes = 0);

}  // namespace keeplora
