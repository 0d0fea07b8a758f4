#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ppdtd/algorithm.hpp"
#include "ppdtd/features.hpp"
#include "ppdtd/mdp.hpp"
#include "ppdtd/oracle.hpp"

namespace ppdtd {

struct MetricsRow {
  std::size_t t = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double consensus_error = 0.0;
  double td_error_mean_abs = 0.0;
  double optimality_gap = 0.0;  ///< ||theta_bar - theta*||_2 (not squared)
  double lyapunov = 0.0;
  double V_e = 0.0;
  double V_track = 0.0;
  double V_consensus = 0.0;
  double V_gap = 0.0;
};

enum class RunStatus { kCompleted, kDiverged, kCapped };

std::string_view to_string(RunStatus status) noexcept;

struct RunRecord {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  RunStatus status = RunStatus::kCompleted;
  std::string message;  ///< diagnostic for diverged or capped runs
};

/// (1/n) sum_i ||theta^i - theta_bar||_2 with theta_bar the u-weighted average.
double consensus_error(const AgentMatrix& Theta, const Eigen::VectorXd& u);

enum class TdErrorKind {
  kValueError,       ///< mean_{i,s} |phi(s)^T theta^i - phi(s)^T theta*|
  kBellmanResidual,  ///< mean_{i,s} |r(s) + gamma (P Phi theta^i)(s) - (Phi theta^i)(s)|
};

std::string_view to_string(TdErrorKind kind) noexcept;

double td_error_mean_abs(const AgentMatrix& Theta, const FeatureMap& phi, const ExactSolution& exact,
                         const PolicyChain& chain, TdErrorKind kind = TdErrorKind::kValueError);

/// Which iterations are written: every one up to `dense_until`, then every
/// `sparse_every`-th; the final iteration is always kept.
struct StridePolicy {
  std::size_t dense_until = 10'000;
  std::size_t sparse_every = 10;

  bool records(std::size_t t, std::size_t horizon) const noexcept {
    return t <= dense_until || t % sparse_every == 0 || t == horizon;
  }
};

inline constexpr std::string_view kCsvHeader =
    "t,alpha,beta,consensus_error,td_error_mean_abs,optimality_gap,lyapunov,V_e,V_track,"
    "V_consensus,V_gap";

/// Fixed notation with 12 decimals, independent of the global locale.
std::string format_number(double value);

std::string format_csv(const std::vector<MetricsRow>& rows);
void write_csv(const RunRecord& record, const std::filesystem::path& path);
std::vector<MetricsRow> read_csv(const std::filesystem::path& path);
std::vector<MetricsRow> parse_csv(std::string_view text);

/// Writes `contents` to `path`, creating parent directories. Throws IoFailure.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ppdtd
