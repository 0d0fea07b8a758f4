#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "ppdtd/algorithm.hpp"
#include "ppdtd/features.hpp"
#include "ppdtd/mdp.hpp"
#include "ppdtd/network.hpp"

namespace ppdtd {

/// Ground truth of the projected Bellman equation for one policy and feature map.
struct ExactSolution {
  Eigen::MatrixXd A;            ///< Phi^T D (gamma P Phi - Phi)
  Eigen::MatrixXd b_agent;      ///< n x d, row i = b^i
  Eigen::VectorXd b_mean;
  Eigen::VectorXd theta_star;   ///< A theta* + b_mean = 0
  double omega = 0.0;           ///< lambda_min(Phi^T D Phi)
  double lambda_max_sym = 0.0;  ///< lambda_max(A + A^T); negative for valid instances
  double sigma_sq = 0.0;        ///< sum_j E ||g(theta*; xi^j)||^2
  double sigma_sq_stderr = 0.0; ///< zero when sigma_sq was enumerated exactly
  bool sigma_sq_exact = true;
  double gamma = 0.0;

  std::size_t num_agents() const noexcept { return static_cast<std::size_t>(b_agent.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(A.rows()); }
};

struct SolveOptions {
  /// sigma^2 is enumerated exactly up to this many (s, a, s') tuples.
  std::size_t max_enumerated_tuples = 1'000'000;
  std::size_t monte_carlo_draws = 1'000'000;
  std::uint64_t monte_carlo_seed = 0;
  /// Reciprocal condition number below which A counts as singular.
  double rcond_floor = 1e-14;
};

/// Builds A and b^i, solves A theta = -b_mean by LU with partial pivoting and
/// one refinement pass, and evaluates omega and sigma^2.
/// Throws SingularSystem when A is numerically singular.
ExactSolution solve_theta_star(const TabularMdp& mdp, const JointPolicy& policy,
                               const PolicyChain& chain, const FeatureMap& phi,
                               const SolveOptions& options = {});

/// g^i(theta) = b^i + A theta.
Eigen::VectorXd exact_semigradient(const ExactSolution& exact, const Eigen::VectorXd& theta,
                                   std::size_t agent);

/// g^i(theta) evaluated as sum_s d(s) phi(s) [r^i(s) + gamma sum_s' P(s,s') phi(s')^T theta - phi(s)^T theta].
Eigen::VectorXd exact_semigradient_sum(const PolicyChain& chain, const FeatureMap& phi, double gamma,
                                       const Eigen::VectorXd& theta, std::size_t agent);

/// Inputs of the step-size constants.
struct ConstantsParams {
  double gamma = 0.9;
  std::size_t n = 1;
  double omega = 1.0;
  double uv = 1.0;
  double rho_W = 1.0;
  double rho_M = 1.0;
  double c_bar = 1.0;
  double norm_W_minus_I = 1.0;
  double sigma_sq = 0.0;
  double r_max = 1.0;
  double radius = 1.0;
  /// Defaults to the smallest admissible value when absent.
  std::optional<double> c_hat;
  std::optional<double> c_hat_markov;
};

struct MarkovConstants {
  std::array<double, 4> C_prime{};  ///< C'_1 .. C'_4
  double c_hat = 0.0;
  double c_hat_floor = 0.0;
  double c1_prime = 0.0;
  double c1_dprime = 0.0;
  double c_min = 0.0;
  std::array<double, 8> c_min_terms{};
};

/// Constants of the convergence theorems evaluated at the supplied (proxy)
/// spectral quantities. Estimates only; they are not certified bounds.
struct ConstantsTable {
  ConstantsParams params;
  Eigen::Matrix4d C;  ///< C(i-1, j-1) = C_ij
  double c_hat = 0.0;
  double c_hat_floor = 0.0;
  double c_prime = 0.0;
  double c_dprime = 0.0;
  double c_min = 0.0;
  std::array<double, 8> c_min_terms{};
  MarkovConstants markov;
};

/// Throws PreconditionViolated when a supplied c_hat is below its floor and
/// InvalidArgument when an input is not positive.
ConstantsTable constants_table(const ConstantsParams& params);

/// Smallest t with t > c_mix * log((t + t0) / c0).
std::size_t markov_burn_in(double c_mix, double c0, double t0);
/// Smallest t with t >= c_mix * log(1 / alpha).
std::size_t constant_step_burn_in(double c_mix, double alpha);

enum class SamplingMode { kIid, kMarkov };

struct LyapunovValue {
  double total = 0.0;
  double V_e = 0.0;          ///< ||G^E(Theta) - Q||^2
  double V_track = 0.0;      ///< ||Y - v 1^T Y / n||^2
  double V_consensus = 0.0;  ///< ||Theta - 1 u^T Theta / n||^2
  double V_gap = 0.0;        ///< ||theta_bar - theta*||^2
};

/// Euclidean Lyapunov surrogate: weighted V_e and V_track plus V_consensus and V_gap.
/// The V_e weight comes from the iid or markov column of the constants table.
LyapunovValue lyapunov(const SwarmState& swarm, const ExactSolution& exact, const MixingMatrices& mm,
                       const ConstantsTable& constants, SamplingMode mode);

/// Components only; weights of the total are taken as given.
LyapunovValue lyapunov_components(const SwarmState& swarm, const ExactSolution& exact,
                                  const MixingMatrices& mm);

/// Lyapunov weights (e, track) for the given constants and mode.
std::pair<double, double> lyapunov_weights(const ConstantsTable& constants, SamplingMode mode);

/// u-weighted average sum_j (u_j / n) theta^j.
Eigen::VectorXd weighted_average(const AgentMatrix& Theta, const Eigen::VectorXd& u);

}  // namespace ppdtd
