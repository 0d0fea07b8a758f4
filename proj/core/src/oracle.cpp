#include "ppdtd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ppdtd/errors.hpp"
#include "ppdtd/sampling.hpp"

namespace ppdtd {

namespace {

// sum_j E||g(theta*; xi^j)||^2 by enumerating every (s, a, s') with positive
// probability. Rewards enter through E[r] and E[r^2] so reward noise is exact.
double enumerate_sigma_sq(const TabularMdp& mdp, const JointPolicy& policy, const PolicyChain& chain,
                          const FeatureMap& phi, const Eigen::VectorXd& theta) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_joint_actions();
  const std::size_t n = mdp.num_agents();
  const bool bernoulli = mdp.reward_noise() == RewardNoise::kBernoulli;
  const Eigen::VectorXd values = phi.matrix() * theta;

  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const double d_s = chain.d(static_cast<Eigen::Index>(s));
    const double feature_sq = phi.matrix().row(static_cast<Eigen::Index>(s)).squaredNorm();
    const std::vector<double> pi = policy.joint_distribution(mdp, s);
    for (std::size_t a = 0; a < A; ++a) {
      if (pi[a] == 0.0) continue;
      for (std::size_t k = 0; k < S; ++k) {
        const double p = mdp.transition(s, a, k);
        if (p == 0.0) continue;
        const double c = mdp.gamma() * values(static_cast<Eigen::Index>(k)) -
                         values(static_cast<Eigen::Index>(s));
        double expected = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double r = mdp.reward(i, s, a, k);
          const double r_sq = bernoulli ? r * mdp.r_max() : r * r;
          expected += r_sq + 2.0 * c * r + c * c;
        }
        total += d_s * pi[a] * p * feature_sq * expected;
      }
    }
  }
  return total;
}

std::pair<double, double> monte_carlo_sigma_sq(const TabularMdp& mdp, const JointPolicy& policy,
                                               const PolicyChain& chain, const FeatureMap& phi,
                                               const Eigen::VectorXd& theta,
                                               const SolveOptions& options) {
  const Sampler sampler(mdp, policy, chain);
  Rng rng(options.monte_carlo_seed, 0x5195);
  std::vector<AgentSample> per_agent;
  Eigen::VectorXd g(theta.size());
  double mean = 0.0, m2 = 0.0;
  const std::size_t draws = std::max<std::size_t>(options.monte_carlo_draws, 2);
  for (std::size_t k = 0; k < draws; ++k) {
    sampler.iid(rng).split(per_agent);
    double value = 0.0;
    for (const AgentSample& xi : per_agent) {
      semigradient(theta.data(), xi, phi, mdp.gamma(), g.data());
      value += g.squaredNorm();
    }
    // Welford update.
    const double delta = value - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (value - mean);
  }
  const double variance = m2 / static_cast<double>(draws - 1);
  return {mean, std::sqrt(variance / static_cast<double>(draws))};
}

}  // namespace

ExactSolution solve_theta_star(const TabularMdp& mdp, const JointPolicy& policy,
                               const PolicyChain& chain, const FeatureMap& phi,
                               const SolveOptions& options) {
  if (phi.num_states() != chain.num_states()) {
    throw InvalidArgument("feature map and chain disagree on the number of states");
  }
  const Eigen::MatrixXd& Phi = phi.matrix();
  const double gamma = mdp.gamma();
  const auto D = chain.d.asDiagonal();

  ExactSolution exact;
  exact.gamma = gamma;
  exact.A = Phi.transpose() * D * (gamma * chain.P * Phi - Phi);
  exact.b_agent = (Phi.transpose() * D * chain.r_agent.transpose()).transpose();
  exact.b_mean = exact.b_agent.colwise().mean().transpose();

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(exact.A);
  const double rcond = lu.rcond();
  if (!(rcond > options.rcond_floor)) {
    std::ostringstream msg;
    msg << "A is numerically singular (rcond = " << rcond << ")";
    throw SingularSystem(msg.str());
  }
  exact.theta_star = lu.solve(-exact.b_mean);
  exact.theta_star += lu.solve(-exact.b_mean - exact.A * exact.theta_star);

  exact.omega = feature_gram_min_eigenvalue(phi, chain.d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(exact.A + exact.A.transpose(), Eigen::EigenvaluesOnly);
  exact.lambda_max_sym = sym.eigenvalues()(sym.eigenvalues().size() - 1);

  const double tuples = static_cast<double>(mdp.num_states()) *
                        static_cast<double>(mdp.num_joint_actions()) *
                        static_cast<double>(mdp.num_states());
  if (tuples <= static_cast<double>(options.max_enumerated_tuples)) {
    exact.sigma_sq = enumerate_sigma_sq(mdp, policy, chain, phi, exact.theta_star);
    exact.sigma_sq_exact = true;
  } else {
    const auto [mean, stderr_] = monte_carlo_sigma_sq(mdp, policy, chain, phi, exact.theta_star, options);
    exact.sigma_sq = mean;
    exact.sigma_sq_stderr = stderr_;
    exact.sigma_sq_exact = false;
  }
  return exact;
}

Eigen::VectorXd exact_semigradient(const ExactSolution& exact, const Eigen::VectorXd& theta,
                                   std::size_t agent) {
  return exact.b_agent.row(static_cast<Eigen::Index>(agent)).transpose() + exact.A * theta;
}

Eigen::VectorXd exact_semigradient_sum(const PolicyChain& chain, const FeatureMap& phi, double gamma,
                                       const Eigen::VectorXd& theta, std::size_t agent) {
  const std::size_t S = chain.num_states();
  const std::size_t d = phi.dimension();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t s = 0; s < S; ++s) {
    const auto si = static_cast<Eigen::Index>(s);
    double v = 0.0;
    for (std::size_t k = 0; k < d; ++k) v += phi(s, k) * theta(static_cast<Eigen::Index>(k));
    double expected_next = 0.0;
    for (std::size_t s2 = 0; s2 < S; ++s2) {
      double v_next = 0.0;
      for (std::size_t k = 0; k < d; ++k) v_next += phi(s2, k) * theta(static_cast<Eigen::Index>(k));
      expected_next += chain.P(si, static_cast<Eigen::Index>(s2)) * v_next;
    }
    const double delta =
        chain.r_agent(static_cast<Eigen::Index>(agent), si) + gamma * expected_next - v;
    for (std::size_t k = 0; k < d; ++k) {
      out(static_cast<Eigen::Index>(k)) += chain.d(si) * phi(s, k) * delta;
    }
  }
  return out;
}

ConstantsTable constants_table(const ConstantsParams& p) {
  auto require_positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw InvalidArgument(std::string("constants table input '") + name + "' must be positive");
    }
  };
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (p.n == 0) throw InvalidArgument("n must be positive");
  require_positive(p.omega, "omega");
  require_positive(p.uv, "uv");
  require_positive(p.rho_W, "rho_W");
  require_positive(p.rho_M, "rho_M");
  require_positive(p.c_bar, "c_bar");
  require_positive(p.norm_W_minus_I, "norm_W_minus_I");
  require_positive(p.radius, "radius");
  if (!(p.sigma_sq >= 0.0) || !(p.r_max >= 0.0)) throw InvalidArgument("sigma_sq and r_max must be >= 0");

  const double g = p.gamma;
  const double n = static_cast<double>(p.n);
  const double w = p.omega;
  const double uv = p.uv;
  const double rW = p.rho_W;
  const double rM = p.rho_M;
  const double cb2 = p.c_bar * p.c_bar;
  const double cb4 = cb2 * cb2;
  const double nWI2 = p.norm_W_minus_I * p.norm_W_minus_I;
  const double g1 = (1.0 + g) * (1.0 + g);
  const double ratio_sq = (uv / n) * (uv / n);

  ConstantsTable t;
  t.params = p;
  Eigen::Matrix4d& C = t.C;
  // Entries that do not involve c_hat first; the floor depends only on them.
  C(3, 0) = 6.0 / ((1.0 - g) * w * uv) * ratio_sq;
  C(0, 2) = 4.0 * g1 * (1.0 + 8.0 * nWI2) * cb2;
  t.c_hat_floor = 16.0 * C(3, 0) * C(0, 2) / rW;
  t.c_hat = p.c_hat.value_or(t.c_hat_floor);
  if (t.c_hat < t.c_hat_floor) {
    std::ostringstream msg;
    msg << "c_hat = " << t.c_hat << " is below its floor " << t.c_hat_floor;
    throw PreconditionViolated(msg.str());
  }
  const double ch = t.c_hat;

  C(0, 0) = cb2 + 16.0 * g1;
  C(1, 0) = 3.0 * cb2 / rM * (ch * ch + 8.0);
  C(2, 0) = 3.0 * cb2 / rM;

  C(0, 1) = 16.0 * g1 * cb2;
  C(1, 1) = 24.0 * cb4 / rM * g1;
  C(2, 1) = 3.0 * cb4 / rM;
  C(3, 1) = 6.0 * n * cb2 / ((1.0 - g) * w * uv);

  C(1, 2) = 48.0 * cb4 / rM * nWI2 * g1;
  C(2, 2) = 2.0 * cb4 / rW * g1;
  C(3, 2) = 6.0 * cb2 / ((1.0 - g) * w * uv) * ratio_sq;

  C(0, 3) = 4.0 * g1 * n * (3.0 * ch + 8.0 * g1 * n);
  C(1, 3) = 48.0 * cb2 / rM * g1 * g1 * n;
  C(2, 3) = 2.0 * cb2 / rW * g1;
  C(3, 3) = (1.0 - g) * w * uv / (2.0 * n);

  const double C11 = C(0, 0), C21 = C(1, 0), C31 = C(2, 0), C41 = C(3, 0);
  const double C12 = C(0, 1), C22 = C(1, 1), C32 = C(2, 1), C42 = C(3, 1);
  const double C13 = C(0, 2), C23 = C(1, 2), C33 = C(2, 2), C43 = C(3, 2);
  const double C14 = C(0, 3), C24 = C(1, 3), C34 = C(2, 3), C44 = C(3, 3);

  t.c_prime = std::min(C44 / 2.0, ch);
  t.c_dprime = (3.0 * rW / (4.0 * C13) + 9.0 * cb2 / (8.0 * C23)) * p.sigma_sq * ch * ch;
  t.c_min_terms = {
      ch * C23 * rM / (2.0 * C11 * C23 * rM + 2.0 * C21 * C13 * rM + 16.0 * C31 * C13 * C23),
      4.0 * C44 * C13 / (rW * (C14 + C24) + 8.0 * C23 * C34),
      rW / (4.0 * (C33 + C43)),
      rM * rW / (2.0 * (C22 * rW + C12 / C13 * C23 * rW + 8.0 * C32 * C23 + 8.0 * C42 * C23)),
      std::min(rM / 2.0, rW / 2.0) / std::min(C44 / 2.0, ch),
      p.norm_W_minus_I / (std::sqrt(2.0) * (1.0 + g)),
      (1.0 - g) * n / (4.0 * uv),
      1.0 / (2.0 * ch),
  };
  t.c_min = *std::min_element(t.c_min_terms.begin(), t.c_min_terms.end());

  MarkovConstants& m = t.markov;
  const double cg = p.r_max + 2.0 * p.radius;
  m.C_prime[0] = 7.0 + 32.0 * (1.0 + g * g);
  m.C_prime[1] = (32.0 * (1.0 + g * g) + 6.0) * cb2;
  m.C_prime[2] = (32.0 * g1 + 2.0) * nWI2 * cb2;
  m.C_prime[3] = 32.0 * g1 * cg * cg + 14.0 * n * cg * cg + (p.radius + 1.0) * (p.radius + 1.0);
  const double C1p = m.C_prime[0], C2p = m.C_prime[1], C3p = m.C_prime[2], C4p = m.C_prime[3];

  m.c_hat_floor = 32.0 * C41 * C3p / rW;
  m.c_hat = p.c_hat_markov.value_or(m.c_hat_floor);
  if (m.c_hat < m.c_hat_floor) {
    std::ostringstream msg;
    msg << "Markov c_hat = " << m.c_hat << " is below its floor " << m.c_hat_floor;
    throw PreconditionViolated(msg.str());
  }
  const double chm = m.c_hat;
  m.c1_prime = std::min(C44 / 2.0, chm / 2.0);
  m.c1_dprime = rW * C4p / (8.0 * C3p) + 9.0 * cb2 / (8.0 * C23) * p.sigma_sq * chm * chm;
  m.c_min_terms = {
      chm * C23 * rM / (4.0 * C1p * C23 * rM + 4.0 * C21 * C3p * rM + 32.0 * C31 * C3p * C23),
      4.0 * C44 * C3p / (rW * C24 + 8.0 * C23 * C34),
      rW / (4.0 * (C33 + C43)),
      rM * rW * C3p /
          (2.0 * (C3p * C22 * rW + C2p * C23 * rW + 8.0 * C32 * C23 * C3p + 8.0 * C42 * C23 * C3p)),
      std::min(rM, rW) / std::min(C44, chm),
      p.norm_W_minus_I / (std::sqrt(2.0) * (1.0 + g)),
      (1.0 - g) / 4.0,
      1.0 / (2.0 * chm),
  };
  m.c_min = *std::min_element(m.c_min_terms.begin(), m.c_min_terms.end());
  return t;
}

std::size_t markov_burn_in(double c_mix, double c0, double t0) {
  if (!(c_mix >= 0.0) || !(c0 > 0.0) || !(t0 >= 0.0)) {
    throw InvalidArgument("burn-in needs c_mix >= 0, c0 > 0, t0 >= 0");
  }
  constexpr std::size_t kCap = 100'000'000;
  for (std::size_t t = 0; t <= kCap; ++t) {
    const double td = static_cast<double>(t);
    if (td > c_mix * std::log((td + t0) / c0)) return t;
  }
  throw CapExceeded("burn-in threshold exceeds 1e8 steps");
}

std::size_t constant_step_burn_in(double c_mix, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return static_cast<std::size_t>(std::max(0.0, std::ceil(c_mix * std::log(1.0 / alpha))));
}

Eigen::VectorXd weighted_average(const AgentMatrix& Theta, const Eigen::VectorXd& u) {
  const double n = static_cast<double>(Theta.rows());
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(Theta.cols());
  for (Eigen::Index j = 0; j < Theta.rows(); ++j) avg += (u(j) / n) * Theta.row(j).transpose();
  return avg;
}

LyapunovValue lyapunov_components(const SwarmState& swarm, const ExactSolution& exact,
                                  const MixingMatrices& mm) {
  const Eigen::Index n = swarm.Theta.rows();
  const double nd = static_cast<double>(n);
  LyapunovValue value;

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd theta = swarm.Theta.row(i).transpose();
    const Eigen::VectorXd e =
        exact_semigradient(exact, theta, static_cast<std::size_t>(i)) - swarm.Q.row(i).transpose();
    value.V_e += e.squaredNorm();
  }

  const Eigen::RowVectorXd y_sum = swarm.Y.colwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    value.V_track += (swarm.Y.row(i) - mm.v(i) * y_sum / nd).squaredNorm();
  }

  const Eigen::VectorXd theta_bar = weighted_average(swarm.Theta, mm.u);
  for (Eigen::Index i = 0; i < n; ++i) {
    value.V_consensus += (swarm.Theta.row(i).transpose() - theta_bar).squaredNorm();
  }
  value.V_gap = (theta_bar - exact.theta_star).squaredNorm();
  return value;
}

std::pair<double, double> lyapunov_weights(const ConstantsTable& constants, SamplingMode mode) {
  const double rho_W = constants.params.rho_W;
  const double e_divisor = mode == SamplingMode::kIid ? constants.C(0, 2) : constants.markov.C_prime[2];
  return {rho_W / (8.0 * e_divisor), rho_W / (8.0 * constants.C(1, 2))};
}

LyapunovValue lyapunov(const SwarmState& swarm, const ExactSolution& exact, const MixingMatrices& mm,
                       const ConstantsTable& constants, SamplingMode mode) {
  LyapunovValue value = lyapunov_components(swarm, exact, mm);
  const auto [w_e, w_track] = lyapunov_weights(constants, mode);
  value.total = w_e * value.V_e + w_track * value.V_track + value.V_consensus + value.V_gap;
  return value;
}

}  // namespace ppdtd
