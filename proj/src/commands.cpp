#include "keeplora/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "keeplora/checkpoint.hpp"
#include "keeplora/config.hpp"
#include "keeplora/csv.hpp"
#include "keeplora/errors.hpp"
#include "keeplora/metrics.hpp"

namespace keeplora {

namespace {

FullConfig load_and_override(const CliOptions& options) {
  FullConfig config = load_config(options.config_path);
  if (options.seed_override) {
    config.run.seed = *options.seed_override;
  }
  return config;
}

std::string out_path(const CliOptions& options, const std::string& name) {
  std::filesystem::create_directories(options.out_dir);
  return (std::filesystem::path(options.out_dir) / name).string();
}

Checkpoint stage_checkpoint(const StageSnapshot& stage, const RunConfig& run,
                            int stage_index) {
  Checkpoint checkpoint;
  checkpoint.add_scalar("stage", static_cast<double>(stage_index + 1));
  checkpoint.add_scalar("alpha", run.alpha);
  checkpoint.add_scalar("r", static_cast<double>(run.r));
  checkpoint.add_scalar("epsilon_w", run.epsilon_w);
  checkpoint.add_scalar("epsilon_f", run.epsilon_f);
  checkpoint.add_scalar("n_layers",
                        static_cast<double>(stage.model.layers.size()));
  for (std::size_t l = 0; l < stage.model.layers.size(); ++l) {
    const LinearLayer& layer = stage.model.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + "/";
    checkpoint.add(prefix + "W", layer.weight);
    DenseMatrix bias(1, layer.bias.size());
    for (std::size_t j = 0; j < layer.bias.size(); ++j)
      bias(0, j) = layer.bias[j];
    checkpoint.add(prefix + "bias", std::move(bias));
    checkpoint.add_scalar(prefix + "activation",
                          static_cast<double>(static_cast<int>(layer.activation)));
  }
  for (const auto& [layer, adapter] : stage.adapters) {
    const std::string prefix = "layer" + std::to_string(layer) + "/";
    checkpoint.add(prefix + "A", adapter.a);
    checkpoint.add(prefix + "B", adapter.b);
  }
  for (const auto& [layer, subspace] : stage.subspaces) {
    const std::string prefix = "layer" + std::to_string(layer) + "/";
    checkpoint.add(prefix + "Wp", subspace.principal.basis.basis());
    checkpoint.add(prefix + "M", subspace.task_dirs.basis.basis());
  }
  return checkpoint;
}

void write_grid_csv(const AccuracyGrid& grid, const std::string& path) {
  CsvWriter writer({"stage", "task", "accuracy"});
  for (std::size_t i = 0; i < grid.a.size(); ++i) {
    for (std::size_t t = 0; t < grid.a[i].size(); ++t) {
      writer.add_row({std::to_string(i + 1), std::to_string(t + 1),
                      format_double(grid.a[i][t])});
    }
  }
  writer.write(path);
}

void write_metrics_csv(const MetricReport& report, const std::string& path) {
  CsvWriter writer({"task", "transfer", "average", "last"});
  for (std::size_t t = 0; t < report.per_task.size(); ++t) {
    const TaskMetrics& tm = report.per_task[t];
    writer.add_row({std::to_string(t + 1),
                    tm.transfer ? format_double(*tm.transfer) : "",
                    format_double(tm.average), format_double(tm.last)});
  }
  writer.add_row({"mean",
                  report.transfer_mean ? format_double(*report.transfer_mean)
                                       : "",
                  format_double(report.average_mean),
                  format_double(report.last_mean)});
  writer.write(path);
}

struct AggregateMetrics {
  std::optional<double> transfer;
  double average = 0.0;
  double last = 0.0;
};

AggregateMetrics aggregates_of(const AccuracyGrid& grid) {
  const MetricReport report = compute_metrics(grid);
  return AggregateMetrics{report.transfer_mean, report.average_mean,
                          report.last_mean};
}

// Rank for the unconstrained baseline that matches the trainable-parameter
// budget of a B-only adapter of rank r over the same adapted layers.
int budget_matched_rank(const ModelSpec& spec, int r) {
  long b_only = 0;
  long both = 0;
  for (int layer : spec.adapted_layers) {
    const long d_in = spec.dims[static_cast<std::size_t>(layer)];
    const long d_out = spec.dims[static_cast<std::size_t>(layer) + 1];
    b_only += static_cast<long>(r) * d_out;
    both += d_in + d_out;
  }
  if (both == 0) return r;
  return std::max(1, static_cast<int>(std::lround(
                         static_cast<double>(b_only) /
                         static_cast<double>(both))));
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int cmd_run(const CliOptions& options) {
  return guarded([&]() {
    const FullConfig config = load_and_override(options);
    const TaskStream stream = build_stream(config.stream);
    const ModelSpec model_spec = resolve_model(config);

    std::vector<double> stage_seconds;
    std::vector<std::chrono::steady_clock::time_point> marks;
    TrainerHooks hooks;
    hooks.before_task = [&marks](int, const LinearModel&) {
      marks.push_back(std::chrono::steady_clock::now());
    };

    const RunResult result = run_continual(config.run, stream, model_spec,
                                           options.threads, &hooks);
    marks.push_back(std::chrono::steady_clock::now());
    for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
      stage_seconds.push_back(
          std::chrono::duration<double>(marks[i + 1] - marks[i]).count());
    }

    const std::string grid_path = out_path(options, "grid.csv");
    const std::string metrics_path = out_path(options, "metrics.csv");
    write_grid_csv(result.grid, grid_path);
    write_metrics_csv(compute_metrics(result.grid), metrics_path);

    std::vector<std::string> checkpoint_paths;
    for (std::size_t i = 0; i < result.stages.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof name, "checkpoint_stage_%02zu.klra", i + 1);
      const std::string path = out_path(options, name);
      save_checkpoint(
          stage_checkpoint(result.stages[i], config.run, static_cast<int>(i)),
          path);
      checkpoint_paths.push_back(path);
    }

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config.echo);
    manifest["stream_fingerprint"] = stream_fingerprint(stream);
    manifest["checkpoints"] = checkpoint_paths;
    manifest["tables"] = {grid_path, metrics_path};
    manifest["stage_seconds"] = stage_seconds;
    write_text_file_atomic(out_path(options, "run_manifest.json"),
                           manifest.dump(2) + "\n");
    return 0;
  });
}

int cmd_ablation(const CliOptions& options) {
  return guarded([&]() {
    const FullConfig config = load_and_override(options);
    const TaskStream stream = build_stream(config.stream);
    const ModelSpec model_spec = resolve_model(config);

    const auto results =
        run_ablation_ladder(config.run, stream, model_spec, options.threads);
    const AggregateMetrics baseline =
        aggregates_of(results.at(InitVariant::vanilla_lora).grid);

    CsvWriter writer({"variant", "transfer", "average", "last",
                      "delta_transfer", "delta_average", "delta_last"});
    for (InitVariant variant :
         {InitVariant::vanilla_lora, InitVariant::frozen_random_a,
          InitVariant::grad_only, InitVariant::grad_minus_wp,
          InitVariant::grad_minus_m, InitVariant::keeplora}) {
      const AggregateMetrics agg = aggregates_of(results.at(variant).grid);
      writer.add_row(
          {to_string(variant),
           agg.transfer ? format_double(*agg.transfer) : "",
           format_double(agg.average), format_double(agg.last),
           agg.transfer && baseline.transfer
               ? format_double(*agg.transfer - *baseline.transfer)
               : "",
           format_double(agg.average - baseline.average),
           format_double(agg.last - baseline.last)});
    }
    writer.write(out_path(options, "ablation.csv"));
    return 0;
  });
}

int cmd_plasticity(const CliOptions& options) {
  return guarded([&]() {
    const FullConfig config = load_and_override(options);
    const TaskStream stream = build_stream(config.stream);
    const ModelSpec model_spec = resolve_model(config);

    CsvWriter writer(
        {"variant", "task", "isolated_acc", "sequential_acc", "drop"});
    for (InitVariant variant :
         {InitVariant::keeplora, InitVariant::vanilla_lora}) {
      RunConfig run = config.run;
      run.variant = variant;
      if (variant == InitVariant::vanilla_lora && config.plasticity.match_budget) {
        run.r = budget_matched_rank(model_spec, config.run.r);
        run.r_per_layer.clear();
      }
      const RunResult sequential =
          run_continual(run, stream, model_spec, options.threads);
      for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
        TaskStream isolated;
        isolated.master_seed = stream.master_seed;
        isolated.tasks.push_back(stream.tasks[t]);
        const RunResult solo =
            run_continual(run, isolated, model_spec, options.threads);
        const double isolated_acc = solo.grid.a[0][0];
        const double sequential_acc = sequential.grid.a[t][t];
        writer.add_row({to_string(variant), std::to_string(t + 1),
                        format_double(isolated_acc),
                        format_double(sequential_acc),
                        format_double(isolated_acc - sequential_acc)});
      }
    }
    writer.write(out_path(options, "plasticity.csv"));
    return 0;
  });
}

int cmd_spectra(const CliOptions& options) {
  return guarded([&]() {
    const FullConfig config = load_and_override(options);
    if (!config.has_spectra) {
      throw ConfigError("spectra", "section required for the spectra command");
    }
    const SpectraSpec& spec = config.spectra;
    const PlantedSpectrumModel planted = gen_planted_spectrum_model(
        spec.seed, spec.d, spec.general_energy_rank,
        spec.specific_direction_count);
    std::vector<int> ks = spec.ks;
    if (ks.empty()) {
      ks.resize(static_cast<std::size_t>(spec.general_energy_rank +
                                         spec.specific_direction_count));
      std::iota(ks.begin(), ks.end(), 1);
    }
    const std::vector<SpectraPoint> points = spectra_analysis(
        planted.weight, {planted.general, planted.specific}, ks);

    CsvWriter writer({"k", "task", "accuracy"});
    for (const SpectraPoint& point : points) {
      writer.add_row({std::to_string(point.k), point.task,
                      format_double(point.accuracy)});
    }
    writer.write(out_path(options, "spectra.csv"));
    return 0;
  });
}

int cmd_heatmap(const CliOptions& options) {
  return guarded([&]() {
    const FullConfig config = load_and_override(options);
    const TaskStream stream = build_stream(config.stream);
    const ModelSpec model_spec = resolve_model(config);

    const RunResult result =
        run_continual(config.run, stream, model_spec, options.threads);
    const InterferenceGrid grid = interference_heatmap(result.stages, stream);

    std::vector<std::string> header;
    for (std::size_t j = 0; j < stream.tasks.size(); ++j) {
      header.push_back("task" + std::to_string(j + 1));
    }
    CsvWriter writer(header);
    for (const auto& row : grid.norms) {
      std::vector<std::string> cells;
      for (double v : row) cells.push_back(format_double(v));
      writer.add_row(cells);
    }
    std::vector<std::string> means;
    for (double v : grid.column_means) means.push_back(format_double(v));
    writer.add_row(means);
    writer.write(out_path(options, "heatmap.csv"));
    return 0;
  });
}

}  // namespace keeplora
