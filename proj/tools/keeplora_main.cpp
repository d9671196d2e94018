#include <functional>
#include <string>

#include <CLI11.hpp>

#include "keeplora/commands.hpp"

namespace {

void attach_common_flags(CLI::App* cmd, keeplora::CliOptions& options,
                         std::string& seed_text) {
  cmd->add_option("--config", options.config_path, "run configuration file")
      ->required();
  cmd->add_option("--out", options.out_dir, "output directory")
      ->envname("KEEPLORA_OUT");
  cmd->add_option("--threads", options.threads,
                  "evaluation fan-out width (results are gathered in task "
                  "order, so any value is deterministic)");
  cmd->add_option("--seed-override", seed_text,
                  "replace run.seed from the config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-learning engine with residual-subspace low-rank "
               "adapters"};
  app.require_subcommand(1);

  keeplora::CliOptions options;
  std::string seed_text;
  std::function<int(const keeplora::CliOptions&)> selected;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const keeplora::CliOptions&);
  };
  const Entry entries[] = {
      {"run", "train over the task stream and emit grid/metrics/checkpoints",
       keeplora::cmd_run},
      {"ablation", "run every init variant and tabulate metric deltas",
       keeplora::cmd_ablation},
      {"plasticity", "compare isolated vs in-sequence accuracy per task",
       keeplora::cmd_plasticity},
      {"spectra", "score tasks under spectral truncation of the planted weight",
       keeplora::cmd_spectra},
      {"heatmap", "adapter output norms across training stages and tasks",
       keeplora::cmd_heatmap},
  };
  for (const Entry& entry : entries) {
    CLI::App* cmd = app.add_subcommand(entry.name, entry.help);
    attach_common_flags(cmd, options, seed_text);
    cmd->callback([&selected, fn = entry.fn]() { selected = fn; });
  }

  CLI11_PARSE(app, argc, argv);

  if (!seed_text.empty()) {
    try {
      options.seed_override = std::stoull(seed_text);
    } catch (const std::exception&) {
      std::fprintf(stderr, "config error [seed-override]: not an integer\n");
      return 1;
    }
  }
  return selected(options);
}
