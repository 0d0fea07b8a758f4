#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ppdtd {

/// How sampled rewards relate to the tabulated reward r^i(s, a, s').
enum class RewardNoise {
  kNone,       ///< the sampled reward equals the table entry
  kBernoulli,  ///< r_max * Bernoulli(r / r_max): same mean, bounded in [0, r_max]
};

/// Finite multi-agent MDP (S, {A^i}, p, {r^i}, gamma) with dense tables.
///
/// Joint actions are indexed lexicographically by agent index: agent 0 is the
/// most significant digit. Transition entries are stored as p[(s*A + a)*S + s']
/// and rewards as r[((i*S + s)*A + a)*S + s'].
class TabularMdp {
 public:
  TabularMdp(std::size_t num_states, std::vector<std::size_t> action_counts,
             std::vector<double> transition, std::vector<double> rewards, double r_max,
             double gamma, RewardNoise noise = RewardNoise::kNone);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_agents() const noexcept { return action_counts_.size(); }
  std::size_t num_joint_actions() const noexcept { return num_joint_actions_; }
  std::span<const std::size_t> action_counts() const noexcept { return action_counts_; }
  double r_max() const noexcept { return r_max_; }
  double gamma() const noexcept { return gamma_; }
  RewardNoise reward_noise() const noexcept { return noise_; }

  double transition(std::size_t s, std::size_t joint_action, std::size_t s_next) const {
    return transition_[(s * num_joint_actions_ + joint_action) * num_states_ + s_next];
  }
  /// Row p(. | s, a) as a contiguous span of length S.
  std::span<const double> transition_row(std::size_t s, std::size_t joint_action) const {
    return {transition_.data() + (s * num_joint_actions_ + joint_action) * num_states_,
            num_states_};
  }
  double reward(std::size_t agent, std::size_t s, std::size_t joint_action,
                std::size_t s_next) const {
    return rewards_[((agent * num_states_ + s) * num_joint_actions_ + joint_action) *
                        num_states_ +
                    s_next];
  }

  std::size_t encode_joint_action(std::span<const std::size_t> actions) const;
  std::vector<std::size_t> decode_joint_action(std::size_t joint_action) const;

  TabularMdp with_reward_noise(RewardNoise noise) const;

 private:
  std::size_t num_states_;
  std::vector<std::size_t> action_counts_;
  std::size_t num_joint_actions_;
  std::vector<double> transition_;
  std::vector<double> rewards_;
  double r_max_;
  double gamma_;
  RewardNoise noise_;
};

/// Product policy pi(a|s) = prod_i pi^i(a^i|s).
class JointPolicy {
 public:
  /// per_agent[i] is an S x |A^i| row-stochastic matrix.
  explicit JointPolicy(std::vector<Eigen::MatrixXd> per_agent);

  static JointPolicy uniform(const TabularMdp& mdp);

  std::size_t num_agents() const noexcept { return per_agent_.size(); }
  const Eigen::MatrixXd& agent(std::size_t i) const { return per_agent_[i]; }
  double prob(std::size_t agent, std::size_t s, std::size_t action) const {
    return per_agent_[agent](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(action));
  }
  /// pi(a|s) for a lexicographic joint-action index.
  double joint_prob(const TabularMdp& mdp, std::size_t s, std::size_t joint_action) const;
  /// All pi(.|s) values, in joint-action order.
  std::vector<double> joint_distribution(const TabularMdp& mdp, std::size_t s) const;

  void check_compatible(const TabularMdp& mdp) const;

 private:
  std::vector<Eigen::MatrixXd> per_agent_;
};

/// Markov chain induced by a fixed joint policy.
struct PolicyChain {
  Eigen::MatrixXd P;        ///< S x S, row-stochastic
  Eigen::MatrixXd r_agent;  ///< n x S, r^i_pi(s)
  Eigen::VectorXd r_mean;   ///< S, average of r_agent rows
  Eigen::VectorXd d;        ///< stationary distribution

  std::size_t num_states() const noexcept { return static_cast<std::size_t>(P.rows()); }
  std::size_t num_agents() const noexcept { return static_cast<std::size_t>(r_agent.rows()); }
};

/// Result of the primitivity test on a chain's transition pattern.
struct ChainStructure {
  bool irreducible = false;
  bool aperiodic = false;
  bool primitive() const noexcept { return irreducible && aperiodic; }
};

/// Decides irreducibility and aperiodicity from the zero pattern of P.
ChainStructure classify_chain(const Eigen::MatrixXd& P);

/// Builds P_pi, r^i_pi, r_pi and d_pi. Throws ReducibleChain when the induced
/// chain is not irreducible and aperiodic.
PolicyChain induce_chain(const TabularMdp& mdp, const JointPolicy& policy);

struct StationaryOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 1'000'000;
};

/// Stationary distribution of an irreducible aperiodic chain by power iteration
/// on the lazy chain (P + I)/2 followed by one refinement step with P.
/// Throws NoConvergence when the iteration cap is reached.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P,
                                        const StationaryOptions& options = {});

// ---------------------------------------------------------------------------
// Generators

struct NavigationOptions {
  double r_max = 1.0;
  double gamma = 0.9;
  /// Upper bound on the number of enumerated (s, a, s') triples.
  std::size_t max_triples = 200'000;
  RewardNoise noise = RewardNoise::kNone;
};

/// Tabular cooperative navigation model together with its behaviour policy.
struct NavigationTask {
  TabularMdp mdp;
  JointPolicy policy;
  std::size_t grid_side;
  /// Landmark cell (row-major index into the grid) assigned to each agent.
  std::vector<std::size_t> landmarks;
  /// Per-state coordinates (S x k) usable as an embedding for RBF features.
  Eigen::MatrixXd state_coordinates;
};

/// Action set shared by the navigation generators.
enum class Move : std::size_t { kUp = 0, kDown, kLeft, kRight, kStay };
inline constexpr std::size_t kNumMoves = 5;

/// Cell reached from `cell` by `move` on a side x side grid (walls block).
std::size_t apply_move(std::size_t cell, Move move, std::size_t side);

/// Full cooperative navigation: the global state is the joint occupancy of all
/// n agents, each agent picks one of the five moves, and agent i is rewarded
/// r_max minus its normalized distance to its landmark, minus
/// `collision_penalty` when it shares a cell with another agent, clipped to
/// [0, r_max]. The policy is uniform over the five moves.
/// Throws StateSpaceTooLarge when S * |A| * S exceeds options.max_triples.
NavigationTask build_cooperative_navigation(std::size_t num_agents, std::size_t grid_side,
                                            double collision_penalty, std::uint64_t seed,
                                            const NavigationOptions& options = {});

/// Factored variant for large teams: one shared navigator walks the grid
/// (agent 0 chooses among the five moves, every other agent has a single
/// no-op action) and agent i is rewarded by the navigator's distance to
/// landmark i. S stays grid_side^2 however many agents there are.
NavigationTask build_factored_navigation(std::size_t num_agents, std::size_t grid_side,
                                         std::uint64_t seed, const NavigationOptions& options = {});

/// Random dense MDP with strictly positive transition rows; handy for tests
/// and small benchmarks.
struct RandomMdpOptions {
  std::size_t num_states = 3;
  std::size_t num_agents = 2;
  std::size_t actions_per_agent = 2;
  double r_max = 1.0;
  double gamma = 0.9;
};

TabularMdp random_mdp(const RandomMdpOptions& options, std::uint64_t seed);

/// Random product policy with strictly positive action probabilities.
JointPolicy random_policy(const TabularMdp& mdp, std::uint64_t seed);

}  // namespace ppdtd
