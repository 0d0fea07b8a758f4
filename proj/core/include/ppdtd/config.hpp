#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppdtd/algorithm.hpp"
#include "ppdtd/metrics.hpp"
#include "ppdtd/mdp.hpp"
#include "ppdtd/oracle.hpp"

namespace ppdtd {

enum class EnvironmentKind { kCooperativeNavigation, kFactoredNavigation, kRandomMdp };
enum class PolicyKind { kUniform, kRandom };

struct EnvironmentSpec {
  EnvironmentKind generator = EnvironmentKind::kFactoredNavigation;
  std::size_t agents = 5;
  std::size_t grid_side = 3;
  double collision_penalty = 0.5;
  std::size_t num_states = 3;         ///< random_mdp only
  std::size_t actions_per_agent = 2;  ///< random_mdp only
  double r_max = 1.0;
  double gamma = 0.9;
  std::uint64_t seed = 1;
  RewardNoise reward_noise = RewardNoise::kNone;
  std::size_t max_triples = 200'000;
  PolicyKind policy = PolicyKind::kUniform;
  std::uint64_t policy_seed = 1;
};

enum class FeatureKind { kRbf, kTabular };

struct FeatureSpec {
  FeatureKind kind = FeatureKind::kRbf;
  std::size_t dimension = 3;
  double bandwidth = 1.0;
  std::uint64_t seed = 1;
};

enum class GraphKind { kRingPlusRandom, kEdgeList };

struct GraphSpec {
  GraphKind kind = GraphKind::kRingPlusRandom;
  double p = 0.3;
  std::uint64_t seed = 1;
  std::filesystem::path path;  ///< edge_list only
};

enum class AlgorithmKind { kPpdtd, kPushSa };

struct AlgorithmSpec {
  std::string name;
  AlgorithmKind kind = AlgorithmKind::kPpdtd;
  SamplingMode mode = SamplingMode::kIid;
  StepSchedule schedule;
  /// Ball radius for the Markovian projection; 0 disables projection.
  double projection_radius = 0.0;
  /// Every agent draws its own transition (iid mode only).
  bool independent_samples = false;
};

struct SweepAxis {
  double min = 1e-3;
  double max = 5.0;
  std::size_t points = 100;

  std::vector<double> grid() const;
};

/// Grid search over a (alpha_t = a/(t+t0) or alpha = a) and b (beta = b/a * alpha).
struct SweepSpec {
  bool enabled = false;
  SweepAxis a;
  SweepAxis b;
  /// Horizon of sweep runs; defaults to the experiment horizon.
  std::optional<std::size_t> horizon;
};

struct MetricsSpec {
  TdErrorKind td_error_kind = TdErrorKind::kValueError;
  StridePolicy stride;
  /// A run is marked capped once any |theta| entry exceeds this.
  double iterate_cap = 1e12;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool svg = false;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  FeatureSpec features;
  GraphSpec graph;
  std::vector<AlgorithmSpec> algorithms;
  std::size_t horizon = 1000;
  std::vector<std::uint64_t> seeds{1};
  SweepSpec sweep;
  MetricsSpec metrics;
  OutputSpec output;
  std::vector<double> theta0;  ///< empty means the zero vector
  /// Optional c_hat values passed to the constants table in oracle reports.
  std::optional<double> c_hat;
  std::optional<double> c_hat_markov;
};

/// Parses a JSON document. Unknown keys and type mismatches raise ConfigError
/// naming the offending field (e.g. "algorithms[1].schedule.c1").
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks cross-field constraints. Throws ConfigError.
void validate_config(const ExperimentConfig& config);

/// Canonical JSON text of the whole configuration (sorted keys, defaults
/// filled in). Equal configurations give equal text.
std::string canonical_json(const ExperimentConfig& config);

std::string_view to_string(EnvironmentKind kind) noexcept;
std::string_view to_string(AlgorithmKind kind) noexcept;
std::string_view to_string(SamplingMode mode) noexcept;

}  // namespace ppdtd
