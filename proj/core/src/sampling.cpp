#include "ppdtd/sampling.hpp"

#include <cmath>
#include <vector>

#include "ppdtd/errors.hpp"

namespace ppdtd {

void Sample::split(std::vector<AgentSample>& out) const {
  out.resize(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = AgentSample{s, rewards[i], s_next};
}

Sampler::Sampler(const TabularMdp& mdp, const JointPolicy& policy, const PolicyChain& chain)
    : mdp_(&mdp), policy_(&policy), chain_(&chain) {
  policy.check_compatible(mdp);
  if (chain.num_states() != mdp.num_states() || chain.num_agents() != mdp.num_agents()) {
    throw InvalidArgument("chain does not belong to this MDP");
  }
  const std::size_t A = mdp.num_joint_actions();
  joint_policy_.resize(mdp.num_states() * A);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    const auto row = policy.joint_distribution(mdp, s);
    std::copy(row.begin(), row.end(), joint_policy_.begin() + static_cast<std::ptrdiff_t>(s * A));
  }
}

double Sampler::noisy_reward(double mean, Rng& rng) const {
  switch (mdp_->reward_noise()) {
    case RewardNoise::kNone:
      return mean;
    case RewardNoise::kBernoulli:
      if (mdp_->r_max() == 0.0) return 0.0;
      return rng.bernoulli(mean / mdp_->r_max()) ? mdp_->r_max() : 0.0;
  }
  return mean;
}

Sample Sampler::transition_from(std::size_t s, Rng& rng) const {
  const std::size_t A = mdp_->num_joint_actions();
  Sample sample;
  sample.s = s;
  sample.joint_action = rng.categorical(std::span<const double>(joint_policy_).subspan(s * A, A));
  sample.s_next = rng.categorical(mdp_->transition_row(s, sample.joint_action));
  sample.rewards.resize(mdp_->num_agents());
  for (std::size_t i = 0; i < mdp_->num_agents(); ++i) {
    sample.rewards[i] = noisy_reward(mdp_->reward(i, s, sample.joint_action, sample.s_next), rng);
  }
  return sample;
}

Sample Sampler::iid(Rng& rng) const {
  const Eigen::VectorXd& d = chain_->d;
  const std::size_t s = rng.categorical(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())));
  return transition_from(s, rng);
}

void Sampler::iid_independent(Rng& rng, std::vector<AgentSample>& out) const {
  const std::size_t n = mdp_->num_agents();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample sample = iid(rng);
    out[i] = AgentSample{sample.s, sample.rewards[i], sample.s_next};
  }
}

Sample markov_step(TrajectoryState& trajectory, const Sampler& sampler) {
  Sample sample = sampler.transition_from(trajectory.current, trajectory.rng);
  trajectory.current = sample.s_next;
  return sample;
}

double worst_case_tv(const Eigen::MatrixXd& Pt, const Eigen::VectorXd& d) {
  double worst = 0.0;
  for (Eigen::Index s0 = 0; s0 < Pt.rows(); ++s0) {
    worst = std::max(worst, 0.5 * (Pt.row(s0).transpose() - d).cwiseAbs().sum());
  }
  return worst;
}

std::size_t mixing_time(const Eigen::MatrixXd& P, const Eigen::VectorXd& d, double alpha,
                        std::size_t cap) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (P.rows() != P.cols() || P.rows() != d.size()) throw InvalidArgument("P and d disagree in size");
  const Eigen::Index S = P.rows();
  if (worst_case_tv(Eigen::MatrixXd::Identity(S, S), d) <= alpha) return 0;

  // powers[k] = P^(2^k).
  std::vector<Eigen::MatrixXd> powers{P};
  std::size_t hi = 1;
  while (worst_case_tv(powers.back(), d) > alpha) {
    if (hi > cap) throw CapExceeded("mixing time exceeds the step cap");
    powers.push_back(powers.back() * powers.back());
    hi *= 2;
  }
  if (hi == 1) return 1;

  // TV(lo) > alpha >= TV(hi); bisect using binary decompositions of t.
  auto power = [&](std::size_t t) {
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(S, S);
    for (std::size_t k = 0; t != 0; ++k, t >>= 1) {
      if (t & 1u) result = result * powers[k];
    }
    return result;
  };
  std::size_t lo = hi / 2;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (worst_case_tv(power(mid), d) <= alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (hi > cap) throw CapExceeded("mixing time exceeds the step cap");
  return hi;
}

MixingFit fit_mixing_constant(const Eigen::MatrixXd& P, const Eigen::VectorXd& d,
                              std::span<const double> alphas) {
  if (alphas.empty()) throw InvalidArgument("need at least one alpha to fit the mixing constant");
  MixingFit fit;
  double num = 0.0, den = 0.0;
  for (double alpha : alphas) {
    const std::size_t tau = mixing_time(P, d, alpha);
    const double x = std::log(1.0 / alpha);
    fit.alphas.push_back(alpha);
    fit.taus.push_back(tau);
    num += x * static_cast<double>(tau);
    den += x * x;
  }
  fit.c_mix = num / den;
  return fit;
}

}  // namespace ppdtd
