#include "ppdtd/algorithm.hpp"

#include <cmath>
#include <sstream>

#include "ppdtd/errors.hpp"

namespace ppdtd {

SwarmState initial_swarm(std::size_t num_agents, const Eigen::VectorXd& theta0) {
  if (num_agents == 0) throw InvalidArgument("swarm needs at least one agent");
  const auto n = static_cast<Eigen::Index>(num_agents);
  const Eigen::Index d = theta0.size();
  SwarmState state;
  state.Theta = theta0.transpose().replicate(n, 1);
  state.Q = AgentMatrix::Zero(n, d);
  state.Y = AgentMatrix::Zero(n, d);
  state.Theta_prev = state.Theta;
  return state;
}

void StepSchedule::validate() const {
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!(c_hat >= 0.0) || !std::isfinite(c_hat)) throw InvalidArgument("c_hat must be finite and >= 0");
  if (kind == ScheduleKind::kConstant) {
    if (!positive(alpha)) throw InvalidArgument("constant step alpha must be positive");
    return;
  }
  if (!positive(c0)) throw InvalidArgument("c0 must be positive");
  if (!(t0 >= 1.0) || !std::isfinite(t0)) throw InvalidArgument("t0 must be >= 1");
  if (!(c1 > 0.5 && c1 <= 1.0)) throw InvalidArgument("c1 must lie in (0.5, 1]");
}

StepSizes schedule_value(const StepSchedule& schedule, std::size_t t) {
  const double alpha = schedule.kind == ScheduleKind::kConstant
                           ? schedule.alpha
                           : schedule.c0 / std::pow(static_cast<double>(t) + schedule.t0, schedule.c1);
  return {alpha, std::min(1.0, schedule.c_hat * alpha)};
}

void project_ball(std::span<double> theta, double radius) {
  double sq = 0.0;
  for (double x : theta) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm <= radius) return;
  const double scale = radius / norm;
  for (double& x : theta) x *= scale;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& theta, double radius) {
  Eigen::VectorXd out = theta;
  project_ball(std::span<double>(out.data(), static_cast<std::size_t>(out.size())), radius);
  return out;
}

void semigradient(const double* theta, const AgentSample& xi, const FeatureMap& phi, double gamma,
                  double* out) {
  const std::size_t d = phi.dimension();
  const double* f = phi.row(xi.s);
  const double* f_next = phi.row(xi.s_next);
  double v = 0.0, v_next = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    v += f[k] * theta[k];
    v_next += f_next[k] * theta[k];
  }
  const double delta = (xi.r + gamma * v_next) - v;
  for (std::size_t k = 0; k < d; ++k) out[k] = f[k] * delta;
}

Eigen::VectorXd semigradient(const Eigen::VectorXd& theta, const AgentSample& xi,
                             const FeatureMap& phi, double gamma) {
  if (static_cast<std::size_t>(theta.size()) != phi.dimension()) {
    throw InvalidArgument("theta dimension does not match the feature map");
  }
  Eigen::VectorXd out(theta.size());
  semigradient(theta.data(), xi, phi, gamma, out.data());
  return out;
}

namespace {

void check_shapes(std::size_t n, std::size_t d, std::size_t num_samples, const StepContext& context) {
  if (num_samples != n) throw InvalidArgument("need exactly one sample per agent");
  if (context.mixing->num_nodes() != n) throw InvalidArgument("mixing matrices do not match the swarm");
  if (context.features->dimension() != d) throw InvalidArgument("feature dimension does not match the swarm");
}

bool all_finite(const AgentMatrix& m) { return m.allFinite(); }

void ensure_shape(AgentMatrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) m.resize(rows, cols);
}

}  // namespace

void ppdtd_step(SwarmState& state, std::span<const AgentSample> samples, StepSizes steps,
                const StepContext& context, StepWorkspace& ws) {
  const std::size_t n = state.num_agents();
  const std::size_t d = state.dimension();
  check_shapes(n, d, samples.size(), context);
  const Eigen::MatrixXd& W = context.mixing->W;
  const Eigen::MatrixXd& M = context.mixing->M;
  const auto N = static_cast<Eigen::Index>(n);
  const auto D = static_cast<Eigen::Index>(d);
  ensure_shape(ws.next_theta, N, D);
  ensure_shape(ws.next_q, N, D);
  ensure_shape(ws.next_y, N, D);
  ensure_shape(ws.grad, N, D);
  ensure_shape(ws.grad_prev, N, D);

  // Theta' = W (Theta + alpha Y); reuse grad as the pre-mix buffer.
  AgentMatrix& premix = ws.grad;
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index k = 0; k < D; ++k) premix(j, k) = state.Theta(j, k) + steps.alpha * state.Y(j, k);
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k < D; ++k) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < N; ++j) acc += W(i, j) * premix(j, k);
      ws.next_theta(i, k) = acc;
    }
    if (context.projection.enabled) {
      project_ball(std::span<double>(&ws.next_theta(i, 0), d), context.projection.radius);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    semigradient(&ws.next_theta(ii, 0), samples[i], *context.features, context.gamma, &ws.grad(ii, 0));
    semigradient(&state.Theta(ii, 0), samples[i], *context.features, context.gamma, &ws.grad_prev(ii, 0));
  }

  const double keep = 1.0 - steps.beta;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k < D; ++k) {
      ws.next_q(i, k) = keep * (state.Q(i, k) - ws.grad_prev(i, k)) + ws.grad(i, k);
    }
  }

  // Y' = M (Y + Q' - Q); grad_prev is free again and holds the inner term.
  AgentMatrix& inner = ws.grad_prev;
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index k = 0; k < D; ++k) inner(j, k) = (state.Y(j, k) + ws.next_q(j, k)) - state.Q(j, k);
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k < D; ++k) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < N; ++j) acc += M(i, j) * inner(j, k);
      ws.next_y(i, k) = acc;
    }
  }

  if (!all_finite(ws.next_theta) || !all_finite(ws.next_q) || !all_finite(ws.next_y)) {
    std::ostringstream msg;
    msg << "non-finite iterate at t=" << state.t + 1 << " (alpha=" << steps.alpha << ")";
    throw NonFiniteIterate(msg.str());
  }

  state.Theta_prev.swap(state.Theta);
  state.Theta.swap(ws.next_theta);
  state.Q.swap(ws.next_q);
  state.Y.swap(ws.next_y);
  ++state.t;
}

PushSaState initial_push_sa(std::size_t num_agents, const Eigen::VectorXd& theta0) {
  if (num_agents == 0) throw InvalidArgument("swarm needs at least one agent");
  const auto n = static_cast<Eigen::Index>(num_agents);
  PushSaState state;
  state.Z = theta0.transpose().replicate(n, 1);
  state.w = Eigen::VectorXd::Ones(n);
  state.Theta = state.Z;
  return state;
}

void push_sa_step(PushSaState& state, std::span<const AgentSample> samples, double alpha,
                  const StepContext& context) {
  const auto n = static_cast<std::size_t>(state.Z.rows());
  const auto d = static_cast<std::size_t>(state.Z.cols());
  check_shapes(n, d, samples.size(), context);
  const Eigen::MatrixXd& M = context.mixing->M;
  const auto N = static_cast<Eigen::Index>(n);
  const auto D = static_cast<Eigen::Index>(d);

  AgentMatrix grad(N, D);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    semigradient(&state.Theta(ii, 0), samples[i], *context.features, context.gamma, &grad(ii, 0));
  }

  AgentMatrix next_z(N, D);
  Eigen::VectorXd next_w(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    double weight = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) weight += M(i, j) * state.w(j);
    next_w(i) = weight;
    for (Eigen::Index k = 0; k < D; ++k) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < N; ++j) acc += M(i, j) * state.Z(j, k);
      next_z(i, k) = acc + alpha * grad(i, k);
    }
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    if (!(next_w(i) >= kWeightUnderflow)) {
      throw WeightUnderflow("push-sum weight underflow at agent " + std::to_string(i));
    }
  }
  AgentMatrix next_theta(N, D);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k < D; ++k) next_theta(i, k) = next_z(i, k) / next_w(i);
  }
  if (!next_z.allFinite() || !next_theta.allFinite()) {
    throw NonFiniteIterate("non-finite push-sum iterate at t=" + std::to_string(state.t + 1));
  }
  state.Z.swap(next_z);
  state.w.swap(next_w);
  state.Theta.swap(next_theta);
  ++state.t;
}

std::string_view to_string(ScheduleKind kind) noexcept {
  return kind == ScheduleKind::kConstant ? "constant" : "decaying";
}

}  // namespace ppdtd
