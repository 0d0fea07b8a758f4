#include "ppdtd/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "ppdtd/errors.hpp"
#include "ppdtd/rng.hpp"

namespace ppdtd {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

std::size_t checked_product(std::span<const std::size_t> factors) {
  std::size_t product = 1;
  for (std::size_t f : factors) {
    if (f == 0) throw InvalidArgument("action set must be nonempty");
    if (product > std::numeric_limits<std::size_t>::max() / f) {
      throw StateSpaceTooLarge("joint action space overflows size_t");
    }
    product *= f;
  }
  return product;
}

}  // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::vector<std::size_t> action_counts,
                       std::vector<double> transition, std::vector<double> rewards,
                       double r_max, double gamma, RewardNoise noise)
    : num_states_(num_states),
      action_counts_(std::move(action_counts)),
      num_joint_actions_(0),
      transition_(std::move(transition)),
      rewards_(std::move(rewards)),
      r_max_(r_max),
      gamma_(gamma),
      noise_(noise) {
  if (num_states_ == 0) throw InvalidArgument("MDP needs at least one state");
  if (action_counts_.empty()) throw InvalidArgument("MDP needs at least one agent");
  num_joint_actions_ = checked_product(action_counts_);
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(r_max_ >= 0.0) || !std::isfinite(r_max_)) throw InvalidArgument("r_max must be finite and >= 0");

  const std::size_t rows = num_states_ * num_joint_actions_;
  if (transition_.size() != rows * num_states_) {
    throw InvalidArgument("transition table has wrong size");
  }
  if (rewards_.size() != num_agents() * rows * num_states_) {
    throw InvalidArgument("reward table has wrong size");
  }
  for (std::size_t row = 0; row < rows; ++row) {
    double total = 0.0;
    for (std::size_t k = 0; k < num_states_; ++k) {
      const double p = transition_[row * num_states_ + k];
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw InvalidArgument("transition probabilities must be finite and nonnegative");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg << "transition row (s=" << row / num_joint_actions_
          << ", a=" << row % num_joint_actions_ << ") sums to " << total;
      throw InvalidArgument(msg.str());
    }
  }
  for (double r : rewards_) {
    if (!(r >= 0.0 && r <= r_max_)) throw InvalidArgument("rewards must lie in [0, r_max]");
  }
}

std::size_t TabularMdp::encode_joint_action(std::span<const std::size_t> actions) const {
  if (actions.size() != num_agents()) throw InvalidArgument("wrong number of agent actions");
  std::size_t index = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] >= action_counts_[i]) throw InvalidArgument("agent action out of range");
    index = index * action_counts_[i] + actions[i];
  }
  return index;
}

std::vector<std::size_t> TabularMdp::decode_joint_action(std::size_t joint_action) const {
  std::vector<std::size_t> actions(num_agents());
  for (std::size_t i = num_agents(); i-- > 0;) {
    actions[i] = joint_action % action_counts_[i];
    joint_action /= action_counts_[i];
  }
  return actions;
}

TabularMdp TabularMdp::with_reward_noise(RewardNoise noise) const {
  TabularMdp copy = *this;
  copy.noise_ = noise;
  return copy;
}

// ---------------------------------------------------------------------------

JointPolicy::JointPolicy(std::vector<Eigen::MatrixXd> per_agent) : per_agent_(std::move(per_agent)) {
  if (per_agent_.empty()) throw InvalidArgument("policy needs at least one agent");
  const Eigen::Index states = per_agent_.front().rows();
  for (const auto& pi : per_agent_) {
    if (pi.rows() != states || pi.cols() == 0) {
      throw InvalidArgument("per-agent policies must share the state count");
    }
    for (Eigen::Index s = 0; s < pi.rows(); ++s) {
      double total = 0.0;
      for (Eigen::Index a = 0; a < pi.cols(); ++a) {
        if (!(pi(s, a) >= 0.0) || !std::isfinite(pi(s, a))) {
          throw InvalidArgument("policy probabilities must be finite and nonnegative");
        }
        total += pi(s, a);
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance) {
        throw InvalidArgument("policy row does not sum to one");
      }
    }
  }
}

JointPolicy JointPolicy::uniform(const TabularMdp& mdp) {
  std::vector<Eigen::MatrixXd> per_agent;
  per_agent.reserve(mdp.num_agents());
  for (std::size_t count : mdp.action_counts()) {
    per_agent.emplace_back(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(mdp.num_states()),
                                                     static_cast<Eigen::Index>(count),
                                                     1.0 / static_cast<double>(count)));
  }
  return JointPolicy(std::move(per_agent));
}

void JointPolicy::check_compatible(const TabularMdp& mdp) const {
  if (num_agents() != mdp.num_agents()) throw InvalidArgument("policy/MDP agent count mismatch");
  for (std::size_t i = 0; i < num_agents(); ++i) {
    if (static_cast<std::size_t>(per_agent_[i].rows()) != mdp.num_states() ||
        static_cast<std::size_t>(per_agent_[i].cols()) != mdp.action_counts()[i]) {
      throw InvalidArgument("policy shape does not match the MDP");
    }
  }
}

double JointPolicy::joint_prob(const TabularMdp& mdp, std::size_t s,
                               std::size_t joint_action) const {
  double prob_product = 1.0;
  const auto counts = mdp.action_counts();
  for (std::size_t i = num_agents(); i-- > 0;) {
    const std::size_t action = joint_action % counts[i];
    joint_action /= counts[i];
    prob_product *= prob(i, s, action);
  }
  return prob_product;
}

std::vector<double> JointPolicy::joint_distribution(const TabularMdp& mdp, std::size_t s) const {
  // Built agent by agent so the result is in lexicographic joint-action order.
  std::vector<double> dist{1.0};
  for (std::size_t i = 0; i < num_agents(); ++i) {
    const std::size_t count = mdp.action_counts()[i];
    std::vector<double> next(dist.size() * count);
    for (std::size_t prefix = 0; prefix < dist.size(); ++prefix) {
      for (std::size_t a = 0; a < count; ++a) {
        next[prefix * count + a] = dist[prefix] * prob(i, s, a);
      }
    }
    dist = std::move(next);
  }
  return dist;
}

// ---------------------------------------------------------------------------

ChainStructure classify_chain(const Eigen::MatrixXd& P) {
  const auto S = static_cast<std::size_t>(P.rows());
  std::vector<std::vector<std::size_t>> successors(S);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k = 0; k < S; ++k) {
      if (P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) > 0.0) {
        successors[s].push_back(k);
      }
    }
  }

  auto bfs_levels = [&](std::size_t root) {
    std::vector<std::ptrdiff_t> level(S, -1);
    std::deque<std::size_t> frontier{root};
    level[root] = 0;
    while (!frontier.empty()) {
      const std::size_t s = frontier.front();
      frontier.pop_front();
      for (std::size_t k : successors[s]) {
        if (level[k] < 0) {
          level[k] = level[s] + 1;
          frontier.push_back(k);
        }
      }
    }
    return level;
  };

  ChainStructure result;
  result.irreducible = true;
  for (std::size_t root = 0; root < S && result.irreducible; ++root) {
    const auto level = bfs_levels(root);
    result.irreducible = std::none_of(level.begin(), level.end(), [](auto l) { return l < 0; });
  }
  if (!result.irreducible) return result;

  // Period = gcd over edges u->v of level(u) + 1 - level(v).
  const auto level = bfs_levels(0);
  std::ptrdiff_t period = 0;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k : successors[s]) {
      period = std::gcd(period, level[s] + 1 - level[k]);
    }
  }
  result.aperiodic = (period == 1);
  return result;
}

PolicyChain induce_chain(const TabularMdp& mdp, const JointPolicy& policy) {
  policy.check_compatible(mdp);
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_joint_actions();
  const std::size_t n = mdp.num_agents();
  const auto Si = static_cast<Eigen::Index>(S);

  PolicyChain chain;
  chain.P = Eigen::MatrixXd::Zero(Si, Si);
  chain.r_agent = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), Si);

  for (std::size_t s = 0; s < S; ++s) {
    const auto si = static_cast<Eigen::Index>(s);
    const std::vector<double> pi = policy.joint_distribution(mdp, s);
    for (std::size_t a = 0; a < A; ++a) {
      if (pi[a] == 0.0) continue;
      for (std::size_t k = 0; k < S; ++k) {
        const double weight = pi[a] * mdp.transition(s, a, k);
        if (weight == 0.0) continue;
        chain.P(si, static_cast<Eigen::Index>(k)) += weight;
        for (std::size_t i = 0; i < n; ++i) {
          chain.r_agent(static_cast<Eigen::Index>(i), si) += weight * mdp.reward(i, s, a, k);
        }
      }
    }
  }

  chain.r_mean = Eigen::VectorXd::Zero(Si);
  for (std::size_t s = 0; s < S; ++s) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += chain.r_agent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
    }
    chain.r_mean(static_cast<Eigen::Index>(s)) = total / static_cast<double>(n);
  }

  const ChainStructure structure = classify_chain(chain.P);
  if (!structure.irreducible) {
    throw ReducibleChain("induced chain is reducible under the given policy");
  }
  if (!structure.aperiodic) {
    throw ReducibleChain("induced chain is periodic under the given policy");
  }
  chain.d = stationary_distribution(chain.P);
  return chain;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, const StationaryOptions& options) {
  if (P.rows() != P.cols() || P.rows() == 0) {
    throw InvalidArgument("transition matrix must be square and nonempty");
  }
  const auto S = static_cast<std::size_t>(P.rows());

  // d^T P with a fixed summation order.
  auto left_multiply = [&](const std::vector<double>& d) {
    std::vector<double> out(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      const double weight = d[s];
      for (std::size_t k = 0; k < S; ++k) {
        out[k] += weight * P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k));
      }
    }
    return out;
  };
  auto normalize = [](std::vector<double>& d) {
    double total = 0.0;
    for (double x : d) total += x;
    for (double& x : d) x /= total;
  };

  std::vector<double> d(S, 1.0 / static_cast<double>(S));
  bool converged = false;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<double> next = left_multiply(d);
    double change = 0.0;
    for (std::size_t k = 0; k < S; ++k) {
      next[k] = 0.5 * (next[k] + d[k]);
      change = std::max(change, std::abs(next[k] - d[k]));
    }
    normalize(next);
    d = std::move(next);
    if (change <= options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NoConvergence("stationary distribution did not converge within the iteration cap");
  }
  d = left_multiply(d);
  normalize(d);

  Eigen::VectorXd result(static_cast<Eigen::Index>(S));
  for (std::size_t k = 0; k < S; ++k) {
    if (!(d[k] > 0.0)) throw ReducibleChain("stationary distribution has a zero entry");
    result(static_cast<Eigen::Index>(k)) = d[k];
  }
  return result;
}

// ---------------------------------------------------------------------------

std::size_t apply_move(std::size_t cell, Move move, std::size_t side) {
  const std::size_t row = cell / side;
  const std::size_t col = cell % side;
  switch (move) {
    case Move::kUp:
      return row == 0 ? cell : cell - side;
    case Move::kDown:
      return row + 1 == side ? cell : cell + side;
    case Move::kLeft:
      return col == 0 ? cell : cell - 1;
    case Move::kRight:
      return col + 1 == side ? cell : cell + 1;
    case Move::kStay:
      return cell;
  }
  return cell;
}

namespace {

std::vector<std::size_t> draw_landmarks(std::size_t num_agents, std::size_t cells,
                                        std::uint64_t seed) {
  Rng rng(seed, 0x1a9d);
  std::vector<std::size_t> landmarks(num_agents);
  if (num_agents <= cells) {
    // Partial Fisher-Yates: distinct landmarks whenever the grid allows it.
    std::vector<std::size_t> pool(cells);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < num_agents; ++i) {
      const std::size_t j = i + rng.uniform_index(cells - i);
      std::swap(pool[i], pool[j]);
      landmarks[i] = pool[i];
    }
  } else {
    for (auto& l : landmarks) l = rng.uniform_index(cells);
  }
  return landmarks;
}

double normalized_distance(std::size_t a, std::size_t b, std::size_t side) {
  const auto ra = static_cast<double>(a / side), ca = static_cast<double>(a % side);
  const auto rb = static_cast<double>(b / side), cb = static_cast<double>(b % side);
  return (std::abs(ra - rb) + std::abs(ca - cb)) / (2.0 * static_cast<double>(side - 1));
}

}  // namespace

NavigationTask build_cooperative_navigation(std::size_t num_agents, std::size_t grid_side,
                                            double collision_penalty, std::uint64_t seed,
                                            const NavigationOptions& options) {
  if (num_agents < 2) throw InvalidArgument("cooperative navigation needs at least two agents");
  if (grid_side < 2) throw InvalidArgument("grid_side must be at least 2");
  if (collision_penalty < 0.0) throw InvalidArgument("collision penalty must be nonnegative");

  const std::size_t cells = grid_side * grid_side;
  // S * A * S in floating point first, so huge configurations fail cleanly.
  const double triples = std::pow(static_cast<double>(cells), 2.0 * static_cast<double>(num_agents)) *
                         std::pow(static_cast<double>(kNumMoves), static_cast<double>(num_agents));
  if (triples > static_cast<double>(options.max_triples)) {
    std::ostringstream msg;
    msg << "cooperative navigation with n=" << num_agents << ", grid_side=" << grid_side
        << " enumerates " << triples << " (s,a,s') triples; cap is " << options.max_triples;
    throw StateSpaceTooLarge(msg.str());
  }

  std::size_t S = 1;
  std::size_t A = 1;
  for (std::size_t i = 0; i < num_agents; ++i) {
    S *= cells;
    A *= kNumMoves;
  }
  const std::vector<std::size_t> landmarks = draw_landmarks(num_agents, cells, seed);

  auto decode_positions = [&](std::size_t s) {
    std::vector<std::size_t> pos(num_agents);
    for (std::size_t i = num_agents; i-- > 0;) {
      pos[i] = s % cells;
      s /= cells;
    }
    return pos;
  };

  std::vector<double> transition(S * A * S, 0.0);
  std::vector<double> rewards(num_agents * S * A * S, 0.0);
  std::vector<std::size_t> moved(num_agents);
  for (std::size_t s = 0; s < S; ++s) {
    const auto pos = decode_positions(s);
    for (std::size_t a = 0; a < A; ++a) {
      std::size_t code = a;
      for (std::size_t i = num_agents; i-- > 0;) {
        moved[i] = apply_move(pos[i], static_cast<Move>(code % kNumMoves), grid_side);
        code /= kNumMoves;
      }
      std::size_t s_next = 0;
      for (std::size_t i = 0; i < num_agents; ++i) s_next = s_next * cells + moved[i];
      transition[(s * A + a) * S + s_next] = 1.0;
      for (std::size_t i = 0; i < num_agents; ++i) {
        bool collided = false;
        for (std::size_t k = 0; k < num_agents; ++k) {
          if (k != i && moved[k] == moved[i]) collided = true;
        }
        double r = options.r_max - normalized_distance(moved[i], landmarks[i], grid_side);
        if (collided) r -= collision_penalty;
        rewards[((i * S + s) * A + a) * S + s_next] = std::clamp(r, 0.0, options.r_max);
      }
    }
  }

  Eigen::MatrixXd coords(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(2 * num_agents));
  for (std::size_t s = 0; s < S; ++s) {
    const auto pos = decode_positions(s);
    for (std::size_t i = 0; i < num_agents; ++i) {
      coords(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(2 * i)) =
          static_cast<double>(pos[i] / grid_side);
      coords(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(2 * i + 1)) =
          static_cast<double>(pos[i] % grid_side);
    }
  }

  TabularMdp mdp(S, std::vector<std::size_t>(num_agents, kNumMoves), std::move(transition),
                 std::move(rewards), options.r_max, options.gamma, options.noise);
  JointPolicy policy = JointPolicy::uniform(mdp);
  return NavigationTask{std::move(mdp), std::move(policy), grid_side, landmarks, std::move(coords)};
}

NavigationTask build_factored_navigation(std::size_t num_agents, std::size_t grid_side,
                                         std::uint64_t seed, const NavigationOptions& options) {
  if (num_agents < 1) throw InvalidArgument("factored navigation needs at least one agent");
  if (grid_side < 2) throw InvalidArgument("grid_side must be at least 2");

  const std::size_t S = grid_side * grid_side;
  const std::size_t A = kNumMoves;
  if (static_cast<double>(S) * static_cast<double>(A) * static_cast<double>(S) >
      static_cast<double>(options.max_triples)) {
    throw StateSpaceTooLarge("factored navigation grid exceeds the triple cap");
  }
  const std::vector<std::size_t> landmarks = draw_landmarks(num_agents, S, seed);

  std::vector<double> transition(S * A * S, 0.0);
  std::vector<double> rewards(num_agents * S * A * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t s_next = apply_move(s, static_cast<Move>(a), grid_side);
      transition[(s * A + a) * S + s_next] = 1.0;
      for (std::size_t i = 0; i < num_agents; ++i) {
        const double r = options.r_max - normalized_distance(s_next, landmarks[i], grid_side);
        rewards[((i * S + s) * A + a) * S + s_next] = std::clamp(r, 0.0, options.r_max);
      }
    }
  }

  Eigen::MatrixXd coords(static_cast<Eigen::Index>(S), 2);
  for (std::size_t s = 0; s < S; ++s) {
    coords(static_cast<Eigen::Index>(s), 0) = static_cast<double>(s / grid_side);
    coords(static_cast<Eigen::Index>(s), 1) = static_cast<double>(s % grid_side);
  }

  std::vector<std::size_t> action_counts(num_agents, 1);
  action_counts[0] = kNumMoves;
  TabularMdp mdp(S, std::move(action_counts), std::move(transition), std::move(rewards),
                 options.r_max, options.gamma, options.noise);
  JointPolicy policy = JointPolicy::uniform(mdp);
  return NavigationTask{std::move(mdp), std::move(policy), grid_side, landmarks, std::move(coords)};
}

// ---------------------------------------------------------------------------

TabularMdp random_mdp(const RandomMdpOptions& options, std::uint64_t seed) {
  if (options.num_agents == 0 || options.actions_per_agent == 0 || options.num_states == 0) {
    throw InvalidArgument("random MDP dimensions must be positive");
  }
  Rng rng(seed, 0x3d9);
  const std::size_t S = options.num_states;
  const std::vector<std::size_t> counts(options.num_agents, options.actions_per_agent);
  const std::size_t A = checked_product(counts);
  if (static_cast<double>(S) * static_cast<double>(A) * static_cast<double>(S) > 1e7) {
    throw StateSpaceTooLarge("random MDP is too large to tabulate");
  }

  std::vector<double> transition(S * A * S);
  for (std::size_t row = 0; row < S * A; ++row) {
    double total = 0.0;
    for (std::size_t k = 0; k < S; ++k) {
      // Exponential weights give a Dirichlet(1) row; the floor keeps it positive.
      const double w = 0.1 - std::log(1.0 - rng.uniform());
      transition[row * S + k] = w;
      total += w;
    }
    double renormalized = 0.0;
    for (std::size_t k = 0; k + 1 < S; ++k) {
      transition[row * S + k] /= total;
      renormalized += transition[row * S + k];
    }
    transition[row * S + S - 1] = std::max(0.0, 1.0 - renormalized);
  }

  std::vector<double> rewards(options.num_agents * S * A * S);
  for (double& r : rewards) r = options.r_max * rng.uniform();
  return TabularMdp(S, counts, std::move(transition), std::move(rewards), options.r_max,
                    options.gamma);
}

JointPolicy random_policy(const TabularMdp& mdp, std::uint64_t seed) {
  Rng rng(seed, 0x90c);
  std::vector<Eigen::MatrixXd> per_agent;
  for (std::size_t count : mdp.action_counts()) {
    Eigen::MatrixXd pi(static_cast<Eigen::Index>(mdp.num_states()), static_cast<Eigen::Index>(count));
    for (Eigen::Index s = 0; s < pi.rows(); ++s) {
      double total = 0.0;
      for (Eigen::Index a = 0; a < pi.cols(); ++a) {
        pi(s, a) = 0.2 + rng.uniform();
        total += pi(s, a);
      }
      pi.row(s) /= total;
    }
    per_agent.push_back(std::move(pi));
  }
  return JointPolicy(std::move(per_agent));
}

}  // namespace ppdtd
