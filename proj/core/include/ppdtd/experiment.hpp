#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppdtd/config.hpp"
#include "ppdtd/features.hpp"
#include "ppdtd/mdp.hpp"
#include "ppdtd/metrics.hpp"
#include "ppdtd/network.hpp"
#include "ppdtd/oracle.hpp"

namespace ppdtd {

/// Everything a run needs that does not depend on the algorithm or seed.
struct Problem {
  TabularMdp mdp;
  JointPolicy policy;
  PolicyChain chain;
  FeatureMap features;
  Digraph graph;
  MixingMatrices mixing;
  SpectralProfile spectral;
  ExactSolution exact;
  /// Lyapunov weights on (V_e, V_track) for iid and markov runs.
  std::pair<double, double> lyapunov_weights_iid{0.0, 0.0};
  std::pair<double, double> lyapunov_weights_markov{0.0, 0.0};
  Eigen::VectorXd theta0;
};

/// Builds MDP, policy chain, features, graph, mixing matrices and the exact
/// solution. Relative edge-list paths are resolved against `base_dir`.
Problem build_problem(const ExperimentConfig& config, const std::filesystem::path& base_dir = {});

struct RunSpec {
  StepSchedule schedule;
  std::uint64_t seed = 0;
  std::size_t horizon = 1;
  StridePolicy stride;
  TdErrorKind td_error_kind = TdErrorKind::kValueError;
  double iterate_cap = 1e12;
  std::string config_digest;
};

/// Executes one run (sample, step, record) of the given algorithm. The
/// random stream depends on the seed only, so algorithms sharing a seed see
/// the same observations. Divergence ends the run with status diverged.
RunRecord run_single(const Problem& problem, const AlgorithmSpec& algorithm, const RunSpec& spec);

/// Hex FNV-1a digest of the canonical configuration (without output options)
/// plus run parameters.
std::string run_digest(const ExperimentConfig& config, const AlgorithmSpec& algorithm,
                       const StepSchedule& schedule, std::uint64_t seed, std::size_t horizon);

/// Across-seed mean of one recorded iteration.
struct AggregateRow {
  MetricsRow mean;
  std::size_t runs = 0;
};

std::vector<AggregateRow> aggregate_runs(const std::vector<const RunRecord*>& runs);
std::string format_aggregate_csv(const std::vector<AggregateRow>& rows);

struct RunnerOptions {
  std::size_t workers = 1;
  std::optional<std::filesystem::path> output_dir;
  std::optional<bool> svg;
  /// Overrides metrics.sparse_every.
  std::optional<std::size_t> sparse_every;
  /// Replaces the seeds list with this single seed.
  std::optional<std::uint64_t> seed;
  std::filesystem::path base_dir;
};

struct RunResult {
  std::string algorithm;
  std::size_t seed_index = 0;
  RunRecord record;
};

struct ExperimentSummary {
  std::vector<RunResult> runs;
  std::map<std::string, std::vector<AggregateRow>> aggregates;
  std::size_t failed_runs = 0;  ///< diverged or capped
  std::filesystem::path output_dir;
};

/// Applies CLI overrides to a configuration.
ExperimentConfig apply_overrides(ExperimentConfig config, const RunnerOptions& options);

/// Runs every (algorithm, seed) pair and writes runs/<algorithm>/seed<k>_<seed>.csv,
/// aggregate/<algorithm>.csv and plots/<metric>.csv (plus SVG when enabled).
ExperimentSummary run_experiment(const ExperimentConfig& config, const RunnerOptions& options);

/// Same as run_experiment on an already built problem; writes nothing when
/// `write_outputs` is false.
ExperimentSummary run_experiment(const ExperimentConfig& config, const Problem& problem,
                                 const RunnerOptions& options, bool write_outputs);

// ---------------------------------------------------------------------------
// Sweeps

/// Step schedule with a = c0 (decaying) or alpha (constant) and beta ratio b / a.
StepSchedule schedule_at(const StepSchedule& base, double a, double b);
/// (a, b) implied by a configured schedule.
std::pair<double, double> schedule_point(const StepSchedule& schedule);

struct SweepEntry {
  std::string algorithm;
  char axis = 'a';  ///< 'a' or 'b'
  std::size_t index = 0;
  double a = 0.0;
  double b = 0.0;
  double final_td_error = 0.0;  ///< across-seed mean; +inf when any run failed
  std::size_t failed_runs = 0;
};

struct SweepChoice {
  std::string algorithm;
  double a = 0.0;
  double b = 0.0;
  double final_td_error = 0.0;
};

/// Best point per algorithm: lowest final TD error on the a axis, then on the
/// b axis at that a. Ties go to the smaller grid index. Pure function of the table.
std::vector<SweepChoice> select_best(const std::vector<SweepEntry>& table,
                                     const std::vector<AlgorithmSpec>& algorithms);

std::string format_sweep_table(const std::vector<SweepEntry>& table);
std::vector<SweepEntry> parse_sweep_table(std::string_view text);

struct SweepSummary {
  std::vector<SweepEntry> table;
  std::vector<SweepChoice> choices;
  ExperimentSummary final_runs;
};

/// Independent sweeps (a with b fixed, then b at the best a), followed by full
/// runs at the selected points. Writes sweep/table.csv and sweep/sweep_report.json.
SweepSummary run_sweep(const ExperimentConfig& config, const RunnerOptions& options);

// ---------------------------------------------------------------------------
// Reports

/// JSON report with theta*, omega, sigma^2, spectral proxies, mixing-time fit
/// and the constants table.
std::string oracle_report_json(const ExperimentConfig& config, const Problem& problem);
/// Human readable summary of the same content.
std::string oracle_report_text(const ExperimentConfig& config, const Problem& problem);

/// Runs `tasks` on up to `workers` threads; rethrows the first failure.
void run_parallel(std::vector<std::function<void()>>& tasks, std::size_t workers);

}  // namespace ppdtd
