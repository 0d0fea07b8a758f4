#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ppdtd/mdp.hpp"
#include "ppdtd/rng.hpp"

namespace ppdtd {

/// Observation seen by one agent: (s, r^i, s').
struct AgentSample {
  std::size_t s = 0;
  double r = 0.0;
  std::size_t s_next = 0;
};

/// One environment transition shared by all agents, with per-agent rewards.
struct Sample {
  std::size_t s = 0;
  std::size_t joint_action = 0;
  std::size_t s_next = 0;
  std::vector<double> rewards;

  /// Per-agent views of this transition, written into `out` (resized to n).
  void split(std::vector<AgentSample>& out) const;
};

/// Draws transitions of a fixed MDP/policy pair. Holds references; the MDP,
/// policy and chain must outlive the sampler.
class Sampler {
 public:
  Sampler(const TabularMdp& mdp, const JointPolicy& policy, const PolicyChain& chain);

  const TabularMdp& mdp() const noexcept { return *mdp_; }
  const PolicyChain& chain() const noexcept { return *chain_; }

  /// a ~ pi(.|s), s' ~ p(.|s, a), rewards (with the MDP's reward noise).
  Sample transition_from(std::size_t s, Rng& rng) const;

  /// s ~ d_pi followed by transition_from(s).
  Sample iid(Rng& rng) const;

  /// Variant where every agent draws its own (s, a, s') independently from
  /// the stationary regime; agent i keeps only its own reward.
  void iid_independent(Rng& rng, std::vector<AgentSample>& out) const;

 private:
  double noisy_reward(double mean, Rng& rng) const;

  const TabularMdp* mdp_;
  const JointPolicy* policy_;
  const PolicyChain* chain_;
  std::vector<double> joint_policy_;  ///< S x |A| table of pi(a|s)
};

/// Position of a single trajectory together with its random stream.
struct TrajectoryState {
  std::size_t current = 0;
  Rng rng;
};

/// Advances the trajectory by one transition: the returned sample starts at
/// the current state and the trajectory moves to its s_next.
Sample markov_step(TrajectoryState& trajectory, const Sampler& sampler);

/// Total variation distance max_{s0} 0.5 * sum_s |Pt(s0, s) - d(s)|.
double worst_case_tv(const Eigen::MatrixXd& Pt, const Eigen::VectorXd& d);

inline constexpr std::size_t kMixingTimeCap = 10'000'000;

/// Smallest t with worst-case TV distance of P^t from d at most alpha, by
/// doubling followed by bisection. Throws CapExceeded past `cap` steps.
std::size_t mixing_time(const Eigen::MatrixXd& P, const Eigen::VectorXd& d, double alpha,
                        std::size_t cap = kMixingTimeCap);

struct MixingFit {
  std::vector<double> alphas;
  std::vector<std::size_t> taus;
  double c_mix = 0.0;  ///< least-squares slope of tau against log(1/alpha), through the origin
};

MixingFit fit_mixing_constant(const Eigen::MatrixXd& P, const Eigen::VectorXd& d,
                              std::span<const double> alphas);

}  // namespace ppdtd
