#include "keeplora/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "keeplora/errors.hpp"
#include "keeplora/linalg.hpp"
#include "keeplora/rng.hpp"

namespace keeplora {

namespace {

constexpr std::uint64_t kTagPool = 0x706f6f6cULL;
constexpr std::uint64_t kTagTask = 0x7461736bULL;
constexpr std::uint64_t kTagMeans = 0x6d65616e73ULL;
constexpr std::uint64_t kTagTrain = 0x747261696eULL;
constexpr std::uint64_t kTagTest = 0x74657374ULL;

DenseMatrix random_orthonormal(std::size_t dim, std::size_t count, Rng& rng) {
  DenseMatrix raw(dim, count);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < count; ++j) raw(i, j) = rng.normal();
  OrthonormalizeResult result =
      orthonormalize_against(raw, OrthonormalBasis(dim));
  if (result.added.count() != count) {
    throw NumericalError("random_orthonormal: degenerate draw");
  }
  return result.added.basis();
}

Batch sample_split(const std::vector<std::vector<double>>& means,
                   std::size_t d, int per_class, double noise_sigma,
                   Rng& rng) {
  const std::size_t classes = means.size();
  const std::size_t n = classes * static_cast<std::size_t>(per_class);
  Batch batch;
  batch.inputs = DenseMatrix(n, d);
  batch.labels.resize(n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (int k = 0; k < per_class; ++k, ++row) {
      for (std::size_t j = 0; j < d; ++j) {
        batch.inputs(row, j) = means[c][j] + noise_sigma * rng.normal();
      }
      batch.labels[row] = static_cast<int>(c);
    }
  }
  return batch;
}

int test_count_per_class(int samples_per_class) {
  return static_cast<int>(
      std::ceil(0.2 * static_cast<double>(samples_per_class)));
}

}  // namespace

std::vector<std::vector<double>> gaussian_class_means(
    std::uint64_t seed, const DenseMatrix& subspace_basis, int classes,
    double mean_norm) {
  const std::size_t d = subspace_basis.rows();
  const std::size_t s = subspace_basis.cols();
  Rng mean_rng(mix_seed({seed, kTagMeans}));
  std::vector<std::vector<double>> means(static_cast<std::size_t>(classes));
  for (auto& mean : means) {
    std::vector<double> coeff(s);
    for (double& v : coeff) v = mean_rng.normal();
    mean.assign(d, 0.0);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < s; ++j)
        mean[i] += subspace_basis(i, j) * coeff[j];
      norm_sq += mean[i] * mean[i];
    }
    const double scale = mean_norm / std::sqrt(norm_sq);
    for (double& v : mean) v *= scale;
  }
  return means;
}

Task gen_gaussian_task(std::uint64_t seed, const DenseMatrix& subspace_basis,
                       int classes, int samples_per_class, double noise_sigma,
                       double mean_norm, std::string name) {
  if (classes < 2) throw ConfigError("classes_per_task", "need >= 2 classes");
  if (samples_per_class < 2) {
    throw ConfigError("samples_per_class", "need >= 2 samples per class");
  }
  const std::size_t d = subspace_basis.rows();
  const std::vector<std::vector<double>> means =
      gaussian_class_means(seed, subspace_basis, classes, mean_norm);

  const int n_test = test_count_per_class(samples_per_class);
  const int n_train = samples_per_class - n_test;
  if (n_train < 1) {
    throw ConfigError("samples_per_class", "split leaves no training rows");
  }

  Task task;
  task.name = std::move(name);
  task.classes = classes;
  Rng train_rng(mix_seed({seed, kTagTrain}));
  Rng test_rng(mix_seed({seed, kTagTest}));
  task.train = sample_split(means, d, n_train, noise_sigma, train_rng);
  task.test = sample_split(means, d, n_test, noise_sigma, test_rng);
  return task;
}

DenseMatrix gaussian_task_basis(const GaussianStreamSpec& spec,
                                int task_index) {
  if (spec.n_tasks < 1) throw ConfigError("n_tasks", "need >= 1 task");
  if (spec.subspace_overlap < 0.0 || spec.subspace_overlap > 1.0) {
    throw ConfigError("subspace_overlap", "must lie in [0,1]");
  }
  const int s = spec.classes_per_task;
  const int shared = static_cast<int>(
      std::lround(spec.subspace_overlap * static_cast<double>(s)));
  const int task_private = s - shared;
  const int needed = shared + spec.n_tasks * task_private;
  if (needed > spec.d_in) {
    throw ConfigError("d_in", "input dimension " + std::to_string(spec.d_in) +
                                  " too small to host " +
                                  std::to_string(needed) +
                                  " orthogonal subspace directions");
  }

  Rng pool_rng(mix_seed({spec.seed, kTagPool}));
  const DenseMatrix pool = random_orthonormal(
      static_cast<std::size_t>(spec.d_in), static_cast<std::size_t>(needed),
      pool_rng);

  DenseMatrix basis(static_cast<std::size_t>(spec.d_in),
                    static_cast<std::size_t>(s));
  for (int j = 0; j < shared; ++j)
    for (int i = 0; i < spec.d_in; ++i)
      basis(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          pool(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  for (int j = 0; j < task_private; ++j) {
    const int src = shared + task_index * task_private + j;
    for (int i = 0; i < spec.d_in; ++i)
      basis(static_cast<std::size_t>(i),
            static_cast<std::size_t>(shared + j)) =
          pool(static_cast<std::size_t>(i), static_cast<std::size_t>(src));
  }
  return basis;
}

TaskStream gen_gaussian_tasks(const GaussianStreamSpec& spec) {
  TaskStream stream;
  stream.master_seed = spec.seed;
  for (int t = 0; t < spec.n_tasks; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "task%02d", t + 1);
    stream.tasks.push_back(gen_gaussian_task(
        mix_seed({spec.seed, kTagTask, static_cast<std::uint64_t>(t)}),
        gaussian_task_basis(spec, t), spec.classes_per_task,
        spec.samples_per_class, spec.noise_sigma, spec.mean_norm, name));
  }
  return stream;
}

PlantedSpectrumModel gen_planted_spectrum_model(std::uint64_t seed, int d,
                                                int general_energy_rank,
                                                int specific_direction_count) {
  if (general_energy_rank < 1 || specific_direction_count < 1) {
    throw ConfigError("spectra", "planted direction counts must be >= 1");
  }
  if (general_energy_rank + specific_direction_count > d) {
    throw ConfigError("spectra.d", "dimension too small for planted blocks");
  }
  const int classes = general_energy_rank + specific_direction_count;
  Rng dir_rng(mix_seed({seed, kTagPool}));
  const DenseMatrix directions = random_orthonormal(
      static_cast<std::size_t>(d), static_cast<std::size_t>(classes), dir_rng);

  // One direction per class column. General classes ride singular values in
  // [4.5, 5.0], specific classes in [0.70, 0.80], so the top-k truncation
  // order is general block first.
  std::vector<double> sigmas(static_cast<std::size_t>(classes));
  for (int c = 0; c < general_energy_rank; ++c) {
    sigmas[static_cast<std::size_t>(c)] =
        5.0 - 0.5 * static_cast<double>(c) /
                  static_cast<double>(general_energy_rank);
  }
  for (int c = 0; c < specific_direction_count; ++c) {
    sigmas[static_cast<std::size_t>(general_energy_rank + c)] =
        0.80 - 0.10 * static_cast<double>(c) /
                   static_cast<double>(specific_direction_count);
  }

  PlantedSpectrumModel planted;
  planted.weight =
      DenseMatrix(static_cast<std::size_t>(d), static_cast<std::size_t>(classes));
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < classes; ++c)
      planted.weight(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) =
          sigmas[static_cast<std::size_t>(c)] *
          directions(static_cast<std::size_t>(i), static_cast<std::size_t>(c));

  constexpr double kSignalScale = 3.0;
  constexpr double kNoiseSigma = 0.05;
  constexpr int kSamplesPerClass = 50;

  auto make_task = [&](int first_class, int count, std::uint64_t tag,
                       const char* name) {
    std::vector<std::vector<double>> means(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) {
      means[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i)
        means[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
            kSignalScale * directions(static_cast<std::size_t>(i),
                                      static_cast<std::size_t>(first_class + c));
    }
    const int n_test = test_count_per_class(kSamplesPerClass);
    const int n_train = kSamplesPerClass - n_test;
    Task task;
    task.name = name;
    task.classes = classes;
    Rng train_rng(mix_seed({seed, tag, kTagTrain}));
    Rng test_rng(mix_seed({seed, tag, kTagTest}));
    task.train = sample_split(means, static_cast<std::size_t>(d), n_train,
                              kNoiseSigma, train_rng);
    task.test = sample_split(means, static_cast<std::size_t>(d), n_test,
                             kNoiseSigma, test_rng);
    // Labels index the class column the samples route through.
    for (int& label : task.train.labels) label += first_class;
    for (int& label : task.test.labels) label += first_class;
    return task;
  };

  planted.general = make_task(0, general_energy_rank, 0x67656eULL, "general");
  planted.specific =
      make_task(general_energy_rank, specific_direction_count, 0x737065ULL,
                "specific");
  return planted;
}

CsvTable load_csv_table(const std::string& path, int declared_classes) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path + ": cannot open file");
  }
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;

  auto split_line = [](const std::string& text) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(text);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!text.empty() && text.back() == ',') cells.push_back("");
    return cells;
  };

  if (!std::getline(in, line)) {
    throw ParseError(path + ": empty file");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_line(line);
  if (table.header.size() < 2) {
    throw ParseError(path + ":1: need at least one feature column and a label");
  }
  const std::size_t width = table.header.size();

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != width) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(width) + " cells, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row(width - 1);
    for (std::size_t j = 0; j + 1 < width; ++j) {
      std::size_t consumed = 0;
      try {
        row[j] = std::stod(cells[j], &consumed);
      } catch (const std::exception&) {
        consumed = 0;
      }
      if (consumed != cells[j].size() || cells[j].empty()) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": non-numeric cell '" + cells[j] + "'");
      }
      if (!std::isfinite(row[j])) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": non-finite feature value");
      }
    }
    const std::string& label_cell = cells[width - 1];
    std::size_t consumed = 0;
    int label = 0;
    try {
      label = std::stoi(label_cell, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != label_cell.size() || label_cell.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": non-integer label '" + label_cell + "'");
    }
    if (label < 0 || (declared_classes > 0 && label >= declared_classes)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": label " +
                       std::to_string(label) + " outside [0," +
                       std::to_string(declared_classes) + ")");
    }
    table.features.push_back(std::move(row));
    table.labels.push_back(label);
  }
  if (table.labels.empty()) {
    throw ParseError(path + ": no data rows");
  }
  return table;
}

void save_csv_table(const CsvTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError(path + ": cannot open file for writing");
  }
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << table.header[j];
  }
  out << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    for (double v : table.features[i]) {
      std::snprintf(buffer, sizeof buffer, "%.17g", v);
      out << buffer << ',';
    }
    out << table.labels[i] << '\n';
  }
}

Task split_table(const CsvTable& table, std::uint64_t master_seed,
                 std::string name, int declared_classes) {
  int classes = declared_classes;
  if (classes <= 0) {
    classes = *std::max_element(table.labels.begin(), table.labels.end()) + 1;
  }

  // Rows grouped per class, ordered by a seed-keyed hash of the row index;
  // the first ceil(0.2 * n) of each class form the test split.
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    by_class[static_cast<std::size_t>(table.labels[i])].push_back(i);
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (auto& rows : by_class) {
    std::stable_sort(rows.begin(), rows.end(),
                     [master_seed](std::size_t a, std::size_t b) {
                       const std::uint64_t ha = splitmix64(master_seed ^ a);
                       const std::uint64_t hb = splitmix64(master_seed ^ b);
                       if (ha != hb) return ha < hb;
                       return a < b;
                     });
    const std::size_t n_test = static_cast<std::size_t>(
        std::ceil(0.2 * static_cast<double>(rows.size())));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      (k < n_test ? test_rows : train_rows).push_back(rows[k]);
    }
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  const std::size_t d = table.features.front().size();
  auto build = [&](const std::vector<std::size_t>& rows) {
    Batch batch;
    batch.inputs = DenseMatrix(rows.size(), d);
    batch.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j)
        batch.inputs(i, j) = table.features[rows[i]][j];
      batch.labels[i] = table.labels[rows[i]];
    }
    return batch;
  };

  Task task;
  task.name = std::move(name);
  task.classes = classes;
  task.train = build(train_rows);
  task.test = build(test_rows);
  if (task.train.size() == 0 || task.test.size() == 0) {
    throw ParseError(task.name + ": split produced an empty side");
  }
  return task;
}

TaskStream load_csv_tasks(const std::vector<std::string>& paths,
                          std::uint64_t master_seed, int declared_classes) {
  if (paths.empty()) {
    throw ConfigError("stream.paths", "no CSV files listed");
  }
  TaskStream stream;
  stream.master_seed = master_seed;
  for (const std::string& path : paths) {
    const CsvTable table = load_csv_table(path, declared_classes);
    stream.tasks.push_back(
        split_table(table, master_seed,
                    std::filesystem::path(path).stem().string(),
                    declared_classes));
  }
  return stream;
}

}  // namespace keeplora
