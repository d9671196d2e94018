#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace keeplora {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "./out";
  int threads = 1;
  std::optional<std::uint64_t> seed_override;  // replaces run.seed
};

// Exit codes: 0 success, 1 configuration error (message names the field),
// 2 runtime or numerical error.
int cmd_run(const CliOptions& options);
int cmd_ablation(const CliOptions& options);
int cmd_plasticity(const CliOptions& options);
int cmd_spectra(const CliOptions& options);
int cmd_heatmap(const CliOptions& options);

}  // namespace keeplora
