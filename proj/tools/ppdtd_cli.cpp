#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ppdtd/config.hpp"
#include "ppdtd/errors.hpp"
#include "ppdtd/experiment.hpp"
#include "ppdtd/metrics.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t workers = 1;
  std::optional<std::size_t> stride;
  bool svg = false;
};

ppdtd::RunnerOptions runner_options(const Flags& flags) {
  ppdtd::RunnerOptions options;
  options.workers = flags.workers;
  options.seed = flags.seed;
  options.sparse_every = flags.stride;
  if (flags.out) options.output_dir = *flags.out;
  if (flags.svg) options.svg = true;
  options.base_dir = std::filesystem::path(flags.config_path).parent_path();
  return options;
}

int report_runs(const ppdtd::ExperimentSummary& summary) {
  for (const ppdtd::RunResult& run : summary.runs) {
    if (run.record.status == ppdtd::RunStatus::kCompleted) continue;
    std::cerr << run.algorithm << " seed " << run.record.seed << ": " << ppdtd::to_string(run.record.status)
              << " (" << run.record.message << ")\n";
  }
  std::cout << "wrote " << summary.runs.size() << " runs to " << summary.output_dir.string() << "\n";
  return summary.failed_runs > 0 ? kExitDivergence : kExitOk;
}

int cmd_run(const Flags& flags) {
  const ppdtd::ExperimentConfig config = ppdtd::load_config(flags.config_path);
  return report_runs(ppdtd::run_experiment(config, runner_options(flags)));
}

int cmd_sweep(const Flags& flags) {
  ppdtd::ExperimentConfig config = ppdtd::load_config(flags.config_path);
  config.sweep.enabled = true;
  const ppdtd::SweepSummary summary = ppdtd::run_sweep(config, runner_options(flags));
  for (const ppdtd::SweepChoice& choice : summary.choices) {
    std::cout << choice.algorithm << ": a=" << choice.a << " b=" << choice.b
              << " final_td_error=" << choice.final_td_error << "\n";
  }
  return report_runs(summary.final_runs);
}

int cmd_oracle(const Flags& flags) {
  const ppdtd::RunnerOptions options = runner_options(flags);
  const ppdtd::ExperimentConfig config = ppdtd::apply_overrides(ppdtd::load_config(flags.config_path), options);
  const ppdtd::Problem problem = ppdtd::build_problem(config, options.base_dir);
  std::cout << ppdtd::oracle_report_text(config, problem);
  if (flags.out) {
    ppdtd::write_text_file(std::filesystem::path(*flags.out) / "oracle_report.json",
                           ppdtd::oracle_report_json(config, problem));
  }
  return kExitOk;
}

int cmd_validate(const Flags& flags) {
  const ppdtd::RunnerOptions options = runner_options(flags);
  const ppdtd::ExperimentConfig config = ppdtd::apply_overrides(ppdtd::load_config(flags.config_path), options);
  const ppdtd::Problem problem = ppdtd::build_problem(config, options.base_dir);
  std::cout << "ok: " << problem.mdp.num_states() << " states, " << problem.mdp.num_agents() << " agents, "
            << problem.features.dimension() << " features, " << config.algorithms.size() << " algorithms\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed TD(0) simulator over directed networks"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("config", flags.config_path, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Run only this seed");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--workers", flags.workers, "Concurrent run units")->check(CLI::PositiveNumber);
    cmd->add_option("--stride", flags.stride, "Record every k-th iteration after the dense prefix")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--svg", flags.svg, "Also write SVG line charts");
  };
  CLI::App* run = app.add_subcommand("run", "Run every algorithm and seed");
  CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep over (a, b), then full runs at the best point");
  CLI::App* oracle = app.add_subcommand("oracle", "Print theta*, omega, sigma^2 and the constants table");
  CLI::App* validate = app.add_subcommand("validate", "Check a configuration and build the problem");
  for (CLI::App* cmd : {run, sweep, oracle, validate}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (oracle->parsed()) return cmd_oracle(flags);
    return cmd_validate(flags);
  } catch (const ppdtd::IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ppdtd::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}
