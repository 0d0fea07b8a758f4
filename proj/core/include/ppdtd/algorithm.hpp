#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "ppdtd/features.hpp"
#include "ppdtd/network.hpp"
#include "ppdtd/sampling.hpp"

namespace ppdtd {

/// n x d with row i holding agent i's vector.
using AgentMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Stacked PP-DTD iterates.
struct SwarmState {
  AgentMatrix Theta;
  AgentMatrix Q;
  AgentMatrix Y;
  AgentMatrix Theta_prev;
  std::size_t t = 0;

  std::size_t num_agents() const noexcept { return static_cast<std::size_t>(Theta.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(Theta.cols()); }
};

/// Theta rows = theta0, Q = Y = 0.
SwarmState initial_swarm(std::size_t num_agents, const Eigen::VectorXd& theta0);

enum class ScheduleKind { kConstant, kDecaying };

/// alpha_t = c0 / (t + t0)^c1 (decaying) or alpha (constant); beta_t = min(1, c_hat * alpha_t).
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::kDecaying;
  double alpha = 0.05;
  double c0 = 1.0;
  double t0 = 5.0;
  double c1 = 1.0;
  double c_hat = 1.0;

  /// Throws InvalidArgument unless c1 in (0.5, 1], t0 >= 1 and the step
  /// parameters are positive and finite.
  void validate() const;
};

struct StepSizes {
  double alpha;
  double beta;
};

StepSizes schedule_value(const StepSchedule& schedule, std::size_t t);

struct ProjectionConfig {
  bool enabled = false;
  double radius = 0.0;
};

/// Euclidean projection onto the ball of the given radius, in place.
void project_ball(std::span<double> theta, double radius);
Eigen::VectorXd project_ball(const Eigen::VectorXd& theta, double radius);

/// g(theta; xi) = phi(s) [r + gamma phi(s')^T theta - phi(s)^T theta], written to out.
void semigradient(const double* theta, const AgentSample& xi, const FeatureMap& phi, double gamma,
                  double* out);
Eigen::VectorXd semigradient(const Eigen::VectorXd& theta, const AgentSample& xi,
                             const FeatureMap& phi, double gamma);

/// Read-only data shared by every step of a run.
struct StepContext {
  const MixingMatrices* mixing;
  const FeatureMap* features;
  double gamma;
  ProjectionConfig projection;
};

/// Scratch buffers reused across steps.
struct StepWorkspace {
  AgentMatrix next_theta;
  AgentMatrix next_q;
  AgentMatrix next_y;
  AgentMatrix grad;
  AgentMatrix grad_prev;
};

/// One PP-DTD iteration:
///   Theta' = W (Theta + alpha Y), rows projected when enabled
///   G = g(Theta'; xi), G~ = g(Theta; xi)        (same samples)
///   Q' = (1 - beta)(Q - G~) + G
///   Y' = M (Y + Q' - Q)
/// `samples` holds one observation per agent. Throws NonFiniteIterate (state
/// untouched) when a new iterate is not finite.
void ppdtd_step(SwarmState& state, std::span<const AgentSample> samples, StepSizes steps,
                const StepContext& context, StepWorkspace& workspace);

/// Push-sum TD(0) baseline state.
struct PushSaState {
  AgentMatrix Z;          ///< push-sum numerators
  Eigen::VectorXd w;      ///< push-sum weights
  AgentMatrix Theta;      ///< de-biased estimates Z / w
  std::size_t t = 0;
};

inline constexpr double kWeightUnderflow = 1e-300;

PushSaState initial_push_sa(std::size_t num_agents, const Eigen::VectorXd& theta0);

/// z' = M z + alpha g(theta; xi), w' = M w, theta' = z' / w'.
/// Throws WeightUnderflow when a weight drops below 1e-300 and
/// NonFiniteIterate when an iterate is not finite.
void push_sa_step(PushSaState& state, std::span<const AgentSample> samples, double alpha,
                  const StepContext& context);

std::string_view to_string(ScheduleKind kind) noexcept;

}  // namespace ppdtd
