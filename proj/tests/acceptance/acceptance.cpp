// Acceptance checks on the desk instance. Prints one PASS/FAIL line per
// criterion and exits nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ppdtd/algorithm.hpp"
#include "ppdtd/config.hpp"
#include "ppdtd/errors.hpp"
#include "ppdtd/experiment.hpp"
#include "ppdtd/oracle.hpp"
#include "ppdtd/sampling.hpp"

namespace {

using namespace ppdtd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const char* kDesk = R"({
  "environment": { "generator": "random_mdp", "agents": 5, "num_states": 3, "actions_per_agent": 2,
                   "gamma": 0.7, "r_max": 1.0, "seed": 7 },
  "features": { "kind": "rbf", "dimension": 2, "bandwidth": 1.0, "seed": 3 },
  "graph": { "kind": "ring_plus_random", "p": 0.3, "seed": 11 },
  "algorithms": [
    { "name": "ppdtd_decaying", "kind": "ppdtd", "mode": "iid",
      "schedule": { "kind": "decaying", "c0": 5.0, "t0": 5, "c1": 1, "beta_ratio": 0.2 } },
    { "name": "push_sa", "kind": "push_sa", "mode": "iid",
      "schedule": { "kind": "decaying", "c0": 5.0, "t0": 5, "c1": 1 } }
  ],
  "horizon": 100000,
  "seeds": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
})";

constexpr std::size_t kLongHorizon = 100'000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(4);
  out << x;
  return out.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

// Roughly log-spaced checkpoints in [lo, hi], rounded to multiples of `step`.
std::vector<std::size_t> checkpoints(std::size_t lo, std::size_t hi, std::size_t step, int count) {
  std::vector<std::size_t> out;
  for (int k = 0; k < count; ++k) {
    const double t = std::exp(std::log(double(lo)) + (std::log(double(hi)) - std::log(double(lo))) * k / (count - 1));
    const std::size_t r = static_cast<std::size_t>(std::llround(t / double(step))) * step;
    if (out.empty() || out.back() != r) out.push_back(r);
  }
  return out;
}

ExperimentConfig desk_config() { return parse_config(kDesk); }

RunSpec long_run_spec(const StepSchedule& schedule, std::uint64_t seed) {
  RunSpec spec;
  spec.schedule = schedule;
  spec.seed = seed;
  spec.horizon = kLongHorizon;
  spec.stride.dense_until = 100;
  spec.stride.sparse_every = 100;
  return spec;
}

double row_at(const RunRecord& r, std::size_t t, double MetricsRow::*field) {
  for (const MetricsRow& row : r.rows) {
    if (row.t == t) return row.*field;
  }
  throw InvalidArgument("iteration " + std::to_string(t) + " was not recorded");
}

// Across-seed mean of a field at each checkpoint.
std::vector<double> mean_at(const std::vector<RunRecord>& runs, const std::vector<std::size_t>& ts,
                            double MetricsRow::*field) {
  std::vector<double> out;
  for (std::size_t t : ts) {
    double total = 0.0;
    for (const RunRecord& r : runs) total += row_at(r, t, field);
    out.push_back(total / static_cast<double>(runs.size()));
  }
  return out;
}

struct Desk {
  ExperimentConfig config = desk_config();
  Problem problem = build_problem(config);
};

// ---------------------------------------------------------------------------

Outcome oracle_correctness(const Desk&) {
  const auto start = Clock::now();
  const Desk desk;
  const ExactSolution& e = desk.problem.exact;
  const double residual = (e.A * e.theta_star + e.b_mean).lpNorm<Eigen::Infinity>();

  const PolicyChain& chain = desk.problem.chain;
  const ExactSolution tab = solve_theta_star(desk.problem.mdp, desk.problem.policy, chain,
                                             tabular_features(chain.num_states()));
  // Value iteration V <- r + gamma P V from zero, run to a fixed point.
  Eigen::VectorXd V = Eigen::VectorXd::Zero(chain.P.rows());
  for (int k = 0; k < 100000; ++k) {
    const Eigen::VectorXd next = chain.r_mean + desk.problem.mdp.gamma() * chain.P * V;
    const double change = (next - V).lpNorm<Eigen::Infinity>();
    V = next;
    if (change == 0.0) break;
  }
  const double vi_error = (tab.theta_star - V).lpNorm<Eigen::Infinity>();
  const double secs = seconds_since(start);
  return {residual <= 1e-10 && vi_error <= 1e-10 && secs < 1.0,
          "residual=" + fmt(residual) + " vi_error=" + fmt(vi_error) + " runtime=" + fmt(secs) + "s"};
}

Outcome unbiasedness(const Desk& desk) {
  const Problem& p = desk.problem;
  const TabularMdp& mdp = p.mdp;
  const std::size_t S = mdp.num_states(), A = mdp.num_joint_actions();
  Rng rng(2024, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(p.features.dimension()));
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) = 10.0 * rng.normal();
    for (std::size_t i = 0; i < mdp.num_agents(); ++i) {
      Eigen::VectorXd expected = Eigen::VectorXd::Zero(theta.size());
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
          const double pa = p.policy.joint_prob(mdp, s, a);
          for (std::size_t sn = 0; sn < S; ++sn) {
            const double w = p.chain.d(static_cast<Eigen::Index>(s)) * pa * mdp.transition(s, a, sn);
            expected += w * semigradient(theta, AgentSample{s, mdp.reward(i, s, a, sn), sn}, p.features, mdp.gamma());
          }
        }
      }
      worst = std::max(worst, (exact_semigradient(p.exact, theta, i) - expected).lpNorm<Eigen::Infinity>());
    }
  }
  return {worst <= 1e-12, "max_abs_diff=" + fmt(worst) + " over 20 theta x 5 agents"};
}

Outcome lipschitz(const Desk& desk) {
  const Problem& p = desk.problem;
  const double gamma = p.mdp.gamma();
  const std::size_t S = p.mdp.num_states();
  Rng rng(2024, 2);
  int violations = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const AgentSample xi{rng.uniform_index(S), p.mdp.r_max() * rng.uniform(), rng.uniform_index(S)};
    Eigen::VectorXd a(static_cast<Eigen::Index>(p.features.dimension())), b(a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      a(j) = 10.0 * rng.normal();
      b(j) = 10.0 * rng.normal();
    }
    const double lhs = (semigradient(a, xi, p.features, gamma) - semigradient(b, xi, p.features, gamma)).norm();
    const double rhs = (1.0 + gamma) * (a - b).norm();
    worst_ratio = std::max(worst_ratio, lhs / rhs);
    // 1e-12 relative slack absorbs rounding in the two norms.
    if (lhs > rhs * (1.0 + 1e-12)) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations in 10^4 pairs, max ratio=" + fmt(worst_ratio)};
}

Outcome mixing_invariants(const Desk&) {
  Rng rng(2024, 3);
  const double ps[] = {0.0, 0.3, 1.0};
  double w_row = 0, m_col = 0, u_err = 0, v_err = 0, sums = 0, min_uv = 1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(48);
    const MixingMatrices mm = build_weights(ring_plus_random(n, ps[trial % 3], 5000 + trial));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    const double nd = static_cast<double>(n);
    w_row = std::max(w_row, (mm.W * ones - ones).lpNorm<Eigen::Infinity>());
    m_col = std::max(m_col, (mm.M.transpose() * ones - ones).lpNorm<Eigen::Infinity>());
    u_err = std::max(u_err, (mm.W.transpose() * mm.u - mm.u).lpNorm<Eigen::Infinity>());
    v_err = std::max(v_err, (mm.M * mm.v - mm.v).lpNorm<Eigen::Infinity>());
    sums = std::max({sums, std::abs(mm.u.sum() - nd), std::abs(mm.v.sum() - nd)});
    min_uv = std::min(min_uv, mm.uv);
  }
  const bool pass = w_row <= 1e-12 && m_col <= 1e-12 && u_err <= 1e-10 && v_err <= 1e-10 && sums <= 1e-10 && min_uv > 0;
  return {pass, "W1-1=" + fmt(w_row) + " 1^TM-1^T=" + fmt(m_col) + " u^TW-u^T=" + fmt(u_err) + " Mv-v=" + fmt(v_err) +
                    " sums=" + fmt(sums) + " min u^Tv=" + fmt(min_uv)};
}

Outcome tracking_conservation(const Desk& desk) {
  const Problem& p = desk.problem;
  const Sampler sampler(p.mdp, p.policy, p.chain);
  const StepContext ctx{&p.mixing, &p.features, p.mdp.gamma(), {}};
  SwarmState s = initial_swarm(p.mdp.num_agents(), p.theta0);
  StepWorkspace ws;
  Rng rng(1, 0);
  std::vector<AgentSample> xs;
  const StepSchedule& schedule = desk.config.algorithms[0].schedule;
  double worst = 0.0;
  bool pass = true;
  for (std::size_t t = 0; t < kLongHorizon; ++t) {
    sampler.iid(rng).split(xs);
    ppdtd_step(s, xs, schedule_value(schedule, t), ctx, ws);
    const double gap = (s.Y.colwise().sum() - s.Q.colwise().sum()).lpNorm<Eigen::Infinity>();
    const double allowed = 1e-9 * (1.0 + s.Q.norm());
    worst = std::max(worst, gap / allowed);
    if (gap > allowed) pass = false;
  }
  return {pass, "max |1^TY-1^TQ| / (1e-9 (1+|Q|)) = " + fmt(worst) + " over 10^5 steps"};
}

struct LongRuns {
  std::vector<RunRecord> iid;
  std::vector<RunRecord> markov;
  std::vector<RunRecord> push_sa_best;
  double iid_seconds = 0.0;
  double markov_radius = 0.0;
};

Outcome decaying_rate(const Desk& desk, LongRuns& runs) {
  const auto start = Clock::now();
  for (std::uint64_t seed : desk.config.seeds) {
    runs.iid.push_back(run_single(desk.problem, desk.config.algorithms[0],
                                  long_run_spec(desk.config.algorithms[0].schedule, seed)));
  }
  runs.iid_seconds = seconds_since(start);
  const auto ts = checkpoints(1000, kLongHorizon, 100, 21);
  const std::vector<double> gap = mean_at(runs.iid, ts, &MetricsRow::V_gap);
  const double slope = loglog_slope(std::vector<double>(ts.begin(), ts.end()), gap);
  return {slope <= -0.8 && runs.iid_seconds < 60.0,
          "slope=" + fmt(slope) + " (gap " + fmt(gap.front()) + " -> " + fmt(gap.back()) + ") runtime=" +
              fmt(runs.iid_seconds) + "s"};
}

Outcome constant_plateau(const Desk& desk) {
  constexpr double kAlpha0 = 0.1;
  constexpr std::size_t kHorizon = 40'000;
  AlgorithmSpec algo = desk.config.algorithms[0];
  algo.schedule.kind = ScheduleKind::kConstant;
  algo.schedule.c_hat = 1.0;
  std::vector<double> plateaus;
  for (int k = 0; k < 3; ++k) {
    algo.schedule.alpha = kAlpha0 / std::pow(2.0, k);
    std::vector<double> tail;
    for (std::uint64_t seed : desk.config.seeds) {
      RunSpec spec;
      spec.schedule = algo.schedule;
      spec.seed = seed;
      spec.horizon = kHorizon;
      spec.stride.dense_until = 0;
      spec.stride.sparse_every = 10;
      const RunRecord r = run_single(desk.problem, algo, spec);
      for (const MetricsRow& row : r.rows) {
        if (row.t > kHorizon / 2) tail.push_back(row.V_gap);
      }
    }
    std::nth_element(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail.size() / 2), tail.end());
    plateaus.push_back(tail[tail.size() / 2]);
  }
  const double ratio = plateaus[0] / plateaus[1];
  const bool monotone = plateaus[0] > plateaus[1] && plateaus[1] > plateaus[2];
  return {monotone && ratio >= 1.3 && ratio <= 4.0,
          "plateaus=" + fmt(plateaus[0]) + "," + fmt(plateaus[1]) + "," + fmt(plateaus[2]) + " ratio=" + fmt(ratio)};
}

Outcome markov_mode(const Desk& desk, LongRuns& runs) {
  const Problem& p = desk.problem;
  const double R = 2.0 * p.exact.theta_star.norm();
  runs.markov_radius = R;
  const double bound = p.mdp.r_max() + 2.0 * R;
  AlgorithmSpec algo = desk.config.algorithms[0];
  algo.mode = SamplingMode::kMarkov;
  algo.projection_radius = R;

  // Instrumented loop: every iterate and every sampled semigradient is checked.
  const Sampler sampler(p.mdp, p.policy, p.chain);
  const StepContext ctx{&p.mixing, &p.features, p.mdp.gamma(), {true, R}};
  double max_theta = 0.0, max_grad = 0.0;
  for (std::uint64_t seed : desk.config.seeds) {
    SwarmState s = initial_swarm(p.mdp.num_agents(), p.theta0);
    StepWorkspace ws;
    TrajectoryState traj{0, Rng(seed, 1)};
    std::vector<AgentSample> xs;
    for (std::size_t t = 0; t < kLongHorizon; ++t) {
      markov_step(traj, sampler).split(xs);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const Eigen::VectorXd theta = s.Theta.row(static_cast<Eigen::Index>(i)).transpose();
        max_grad = std::max(max_grad, semigradient(theta, xs[i], p.features, p.mdp.gamma()).norm());
      }
      ppdtd_step(s, xs, schedule_value(algo.schedule, t), ctx, ws);
      for (Eigen::Index i = 0; i < s.Theta.rows(); ++i) max_theta = std::max(max_theta, s.Theta.row(i).norm());
    }
  }

  for (std::uint64_t seed : desk.config.seeds) {
    runs.markov.push_back(run_single(p, algo, long_run_spec(algo.schedule, seed)));
  }
  const auto ts = checkpoints(1000, kLongHorizon, 100, 21);
  const std::vector<double> gap = mean_at(runs.markov, ts, &MetricsRow::V_gap);
  const double slope = loglog_slope(std::vector<double>(ts.begin(), ts.end()), gap);
  // 1e-12 relative slack covers rounding in the projection's rescaling.
  const bool pass = max_theta <= R * (1.0 + 1e-12) && max_grad <= bound && slope <= -0.7;
  return {pass, "R=" + fmt(R) + " max|theta|=" + fmt(max_theta) + " max|g|=" + fmt(max_grad) + " (bound " +
                    fmt(bound) + ") slope=" + fmt(slope)};
}

Outcome beta_one_reduction(const Desk& desk) {
  const Problem& p = desk.problem;
  const Sampler sampler(p.mdp, p.policy, p.chain);
  const StepContext ctx{&p.mixing, &p.features, p.mdp.gamma(), {}};
  const Eigen::MatrixXd& W = p.mixing.W;
  const Eigen::MatrixXd& M = p.mixing.M;
  const Eigen::Index n = static_cast<Eigen::Index>(p.mdp.num_agents());
  const Eigen::Index d = static_cast<Eigen::Index>(p.features.dimension());

  SwarmState s = initial_swarm(p.mdp.num_agents(), p.theta0);
  StepWorkspace ws;
  AgentMatrix Theta = s.Theta, Q = s.Q, Y = s.Y;
  Rng rng_pp(42, 0), rng_gt(42, 0);
  std::vector<AgentSample> xa, xb;
  const StepSchedule& schedule = desk.config.algorithms[0].schedule;
  auto same = [](const AgentMatrix& a, const AgentMatrix& b) {
    return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
  };
  for (std::size_t t = 0; t < 1000; ++t) {
    const double alpha = schedule_value(schedule, t).alpha;
    sampler.iid(rng_pp).split(xa);
    ppdtd_step(s, xa, {alpha, 1.0}, ctx, ws);

    // Gradient-tracking TD: Theta' = W(Theta + alpha Y), Q' = g(Theta'), Y' = M(Y + Q' - Q).
    sampler.iid(rng_gt).split(xb);
    AgentMatrix x(n, d), theta_next(n, d), q_next(n, d), z(n, d), y_next(n, d);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < d; ++k) x(j, k) = Theta(j, k) + alpha * Y(j, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) acc += W(i, j) * x(j, k);
        theta_next(i, k) = acc;
      }
      semigradient(&theta_next(i, 0), xb[static_cast<std::size_t>(i)], p.features, p.mdp.gamma(), &q_next(i, 0));
    }
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < d; ++k) z(j, k) = (Y(j, k) + q_next(j, k)) - Q(j, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) acc += M(i, j) * z(j, k);
        y_next(i, k) = acc;
      }
    }
    Theta = theta_next;
    Q = q_next;
    Y = y_next;
    if (!same(s.Theta, Theta) || !same(s.Q, Q) || !same(s.Y, Y)) {
      return {false, "trajectories differ at t=" + std::to_string(t + 1)};
    }
  }
  return {true, "bit-identical Theta, Q, Y over 10^3 steps"};
}

Outcome consensus_decay(const LongRuns& runs) {
  auto ratio = [](const std::vector<RunRecord>& rs) {
    const double early = mean_at(rs, {100}, &MetricsRow::consensus_error)[0];
    const double late = mean_at(rs, {kLongHorizon}, &MetricsRow::consensus_error)[0];
    return late / early;
  };
  const double iid = ratio(runs.iid), markov = ratio(runs.markov);
  return {iid <= 1e-3 && markov <= 1e-3, "ratio iid=" + fmt(iid) + " markov=" + fmt(markov)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Outcome determinism(const Desk& desk, const fs::path& scratch) {
  ExperimentConfig c = desk.config;
  c.horizon = 5000;
  c.seeds = {1, 2};
  std::vector<fs::path> dirs{scratch / "determinism_a", scratch / "determinism_b"};
  for (std::size_t k = 0; k < 2; ++k) {
    RunnerOptions options;
    options.output_dir = dirs[k];
    options.workers = k + 1;
    run_experiment(c, options);
  }
  std::size_t files = 0, mismatches = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    ++files;
    if (slurp(entry.path()) != slurp(dirs[1] / fs::relative(entry.path(), dirs[0]))) ++mismatches;
  }
  return {files > 0 && mismatches == 0, std::to_string(files) + " CSV files compared, " + std::to_string(mismatches) +
                                           " differ"};
}

Outcome baseline_sanity(const Desk& desk, LongRuns& runs, const fs::path& scratch) {
  ExperimentConfig c = desk.config;
  c.algorithms = {desk.config.algorithms[1]};
  c.sweep.enabled = true;
  c.sweep.horizon = 10'000;
  c.horizon = kLongHorizon;
  c.metrics.stride.dense_until = 100;
  c.metrics.stride.sparse_every = 100;
  RunnerOptions options;
  options.output_dir = scratch / "push_sa_sweep";
  const SweepSummary sweep = run_sweep(c, options);
  double best_a = sweep.choices.front().a;
  for (const RunResult& r : sweep.final_runs.runs) runs.push_sa_best.push_back(r.record);

  auto final_gap = [](const std::vector<RunRecord>& rs) {
    return mean_at(rs, {kLongHorizon}, &MetricsRow::V_gap)[0];
  };
  const double pp = final_gap(runs.iid), psa = final_gap(runs.push_sa_best);
  return {psa <= 10.0 * pp, "push_sa(a=" + fmt(best_a) + ") gap=" + fmt(psa) + " ppdtd gap=" + fmt(pp) +
                                " ratio=" + fmt(psa / pp)};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "ppdtd_acceptance";
  fs::remove_all(scratch);
  const Desk desk;
  LongRuns runs;

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "oracle correctness", [&] { return oracle_correctness(desk); }},
      {2, "semigradient unbiasedness", [&] { return unbiasedness(desk); }},
      {3, "semigradient Lipschitz bound", [&] { return lipschitz(desk); }},
      {4, "stochasticity and eigenvector invariants", [&] { return mixing_invariants(desk); }},
      {5, "tracking conservation", [&] { return tracking_conservation(desk); }},
      {6, "decaying-step rate (iid)", [&] { return decaying_rate(desk, runs); }},
      {7, "constant-step plateau", [&] { return constant_plateau(desk); }},
      {8, "markovian mode", [&] { return markov_mode(desk, runs); }},
      {9, "beta=1 reduction", [&] { return beta_one_reduction(desk); }},
      {10, "consensus decay", [&] { return consensus_decay(runs); }},
      {11, "determinism", [&] { return determinism(desk, scratch); }},
      {12, "baseline sanity (push-sum)", [&] { return baseline_sanity(desk, runs, scratch); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %2d %s: %s [%.2fs]\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  }
  fs::remove_all(scratch);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
