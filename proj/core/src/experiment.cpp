#include "ppdtd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#ifdef PPDTD_VENDORED_JSON
#include "json.hpp"
#else
#include <nlohmann/json.hpp>
#endif

#include "ppdtd/errors.hpp"
#include "ppdtd/plotdata.hpp"
#include "ppdtd/sampling.hpp"

namespace ppdtd {

using nlohmann::json;

namespace {

struct Environment {
  TabularMdp mdp;
  Eigen::MatrixXd coordinates;
};

Environment build_environment(const EnvironmentSpec& env) {
  NavigationOptions nav;
  nav.r_max = env.r_max;
  nav.gamma = env.gamma;
  nav.max_triples = env.max_triples;
  nav.noise = env.reward_noise;
  switch (env.generator) {
    case EnvironmentKind::kCooperativeNavigation: {
      NavigationTask task =
          build_cooperative_navigation(env.agents, env.grid_side, env.collision_penalty, env.seed, nav);
      return {std::move(task.mdp), std::move(task.state_coordinates)};
    }
    case EnvironmentKind::kFactoredNavigation: {
      NavigationTask task = build_factored_navigation(env.agents, env.grid_side, env.seed, nav);
      return {std::move(task.mdp), std::move(task.state_coordinates)};
    }
    case EnvironmentKind::kRandomMdp: {
      RandomMdpOptions opts;
      opts.num_states = env.num_states;
      opts.num_agents = env.agents;
      opts.actions_per_agent = env.actions_per_agent;
      opts.r_max = env.r_max;
      opts.gamma = env.gamma;
      TabularMdp mdp = random_mdp(opts, env.seed).with_reward_noise(env.reward_noise);
      Eigen::MatrixXd coords(static_cast<Eigen::Index>(env.num_states), 1);
      for (Eigen::Index s = 0; s < coords.rows(); ++s) coords(s, 0) = static_cast<double>(s);
      return {std::move(mdp), std::move(coords)};
    }
  }
  throw ConfigError("environment.generator: unsupported");
}

ConstantsParams constants_params(const Problem& p, const ExperimentConfig& config) {
  ConstantsParams params;
  params.gamma = p.mdp.gamma();
  params.n = p.mdp.num_agents();
  params.omega = p.exact.omega;
  params.uv = p.mixing.uv;
  params.rho_W = p.spectral.rho_W_proxy;
  params.rho_M = p.spectral.rho_M_proxy;
  params.c_bar = p.spectral.c_bar_proxy;
  params.norm_W_minus_I = p.spectral.norm_W_minus_I;
  params.sigma_sq = p.exact.sigma_sq;
  params.r_max = p.mdp.r_max();
  double radius = 0.0;
  for (const AlgorithmSpec& a : config.algorithms) radius = std::max(radius, a.projection_radius);
  params.radius = radius > 0.0 ? radius : 2.0 * p.exact.theta_star.norm() + 1.0;
  params.c_hat = config.c_hat;
  params.c_hat_markov = config.c_hat_markov;
  return params;
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, value >>= 4) out[static_cast<std::size_t>(k)] = kDigits[value & 0xf];
  return out;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

}  // namespace

Problem build_problem(const ExperimentConfig& config, const std::filesystem::path& base_dir) {
  Environment env = build_environment(config.environment);
  JointPolicy policy = config.environment.policy == PolicyKind::kUniform
                           ? JointPolicy::uniform(env.mdp)
                           : random_policy(env.mdp, config.environment.policy_seed);
  PolicyChain chain = induce_chain(env.mdp, policy);

  FeatureMap features = config.features.kind == FeatureKind::kTabular
                            ? tabular_features(env.mdp.num_states())
                            : rbf_features(env.coordinates, config.features.dimension,
                                           config.features.bandwidth, config.features.seed);

  const std::size_t n = env.mdp.num_agents();
  Digraph graph = [&] {
    if (config.graph.kind == GraphKind::kRingPlusRandom) {
      return ring_plus_random(n, config.graph.p, config.graph.seed);
    }
    std::filesystem::path path = config.graph.path;
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return read_edge_list(path, n);
  }();
  if (graph.num_nodes() != n) throw ConfigError("graph: node count differs from environment.agents");
  MixingMatrices mixing = build_weights(graph);
  SpectralProfile spectral = spectral_profile(mixing);
  ExactSolution exact = solve_theta_star(env.mdp, policy, chain, features);

  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features.dimension()));
  if (!config.theta0.empty()) {
    if (config.theta0.size() != features.dimension()) {
      throw ConfigError("theta0: length " + std::to_string(config.theta0.size()) +
                        " differs from the feature dimension " + std::to_string(features.dimension()));
    }
    for (std::size_t k = 0; k < config.theta0.size(); ++k) theta0(static_cast<Eigen::Index>(k)) = config.theta0[k];
  }

  Problem problem{std::move(env.mdp), std::move(policy), std::move(chain), std::move(features),
                  std::move(graph),   std::move(mixing), std::move(spectral), std::move(exact),
                  {0.0, 0.0},         {0.0, 0.0},        std::move(theta0)};
  // The weights depend only on c_hat-free entries, so floors are used here.
  ConstantsParams params = constants_params(problem, config);
  params.c_hat.reset();
  params.c_hat_markov.reset();
  try {
    const ConstantsTable table = constants_table(params);
    problem.lyapunov_weights_iid = lyapunov_weights(table, SamplingMode::kIid);
    problem.lyapunov_weights_markov = lyapunov_weights(table, SamplingMode::kMarkov);
  } catch (const InvalidArgument&) {
    // A single agent has W = I; the estimation and tracking terms get weight 0.
  }
  return problem;
}

std::string run_digest(const ExperimentConfig& config, const AlgorithmSpec& algorithm,
                       const StepSchedule& schedule, std::uint64_t seed, std::size_t horizon) {
  // Output options do not influence results and are left out of the digest.
  ExperimentConfig keyed = config;
  keyed.output = OutputSpec{};
  std::ostringstream key;
  key.precision(17);
  key << canonical_json(keyed) << "|algorithm=" << algorithm.name << "|schedule=" << to_string(schedule.kind)
      << ',' << schedule.alpha << ',' << schedule.c0 << ',' << schedule.t0 << ',' << schedule.c1 << ','
      << schedule.c_hat << "|seed=" << seed << "|horizon=" << horizon;
  return hex64(fnv1a(key.str()));
}

RunRecord run_single(const Problem& problem, const AlgorithmSpec& algorithm, const RunSpec& spec) {
  RunRecord record;
  record.seed = spec.seed;
  record.config_digest = spec.config_digest;
  spec.schedule.validate();

  const Sampler sampler(problem.mdp, problem.policy, problem.chain);
  const std::size_t n = problem.mdp.num_agents();
  StepContext context{&problem.mixing, &problem.features, problem.mdp.gamma(), {}};
  if (algorithm.projection_radius > 0.0 && algorithm.mode == SamplingMode::kMarkov) {
    context.projection = {true, algorithm.projection_radius};
  }
  const bool push_sa = algorithm.kind == AlgorithmKind::kPushSa;
  const auto weights = algorithm.mode == SamplingMode::kIid ? problem.lyapunov_weights_iid
                                                            : problem.lyapunov_weights_markov;

  // One stream per seed: algorithms sharing a seed observe the same samples.
  Rng rng(spec.seed, 0);
  TrajectoryState trajectory{0, Rng(spec.seed, 1)};
  std::vector<AgentSample> samples(n);

  SwarmState swarm = initial_swarm(n, problem.theta0);
  StepWorkspace workspace;
  PushSaState push = initial_push_sa(n, problem.theta0);

  auto record_row = [&](std::size_t t, StepSizes steps) {
    const AgentMatrix& Theta = push_sa ? push.Theta : swarm.Theta;
    MetricsRow row;
    row.t = t;
    row.alpha = steps.alpha;
    row.beta = push_sa ? 0.0 : steps.beta;
    row.consensus_error = consensus_error(Theta, problem.mixing.u);
    row.td_error_mean_abs = td_error_mean_abs(Theta, problem.features, problem.exact, problem.chain, spec.td_error_kind);
    row.optimality_gap = (weighted_average(Theta, problem.mixing.u) - problem.exact.theta_star).norm();
    LyapunovValue v;
    if (push_sa) {
      SwarmState view;
      view.Theta = Theta;
      view.Q = AgentMatrix::Zero(Theta.rows(), Theta.cols());
      view.Y = view.Q;
      v = lyapunov_components(view, problem.exact, problem.mixing);
      v.V_e = 0.0;
      v.V_track = 0.0;
    } else {
      v = lyapunov_components(swarm, problem.exact, problem.mixing);
    }
    row.V_e = v.V_e;
    row.V_track = v.V_track;
    row.V_consensus = v.V_consensus;
    row.V_gap = v.V_gap;
    row.lyapunov = weights.first * v.V_e + weights.second * v.V_track + v.V_consensus + v.V_gap;
    record.rows.push_back(row);
  };

  for (std::size_t t = 0; t < spec.horizon; ++t) {
    const StepSizes steps = schedule_value(spec.schedule, t);
    if (algorithm.mode == SamplingMode::kMarkov) {
      markov_step(trajectory, sampler).split(samples);
    } else if (algorithm.independent_samples) {
      sampler.iid_independent(rng, samples);
    } else {
      sampler.iid(rng).split(samples);
    }
    try {
      if (push_sa) {
        push_sa_step(push, samples, steps.alpha, context);
      } else {
        ppdtd_step(swarm, samples, steps, context, workspace);
      }
    } catch (const NonFiniteIterate& e) {
      record.status = RunStatus::kDiverged;
      record.message = e.what();
      break;
    } catch (const WeightUnderflow& e) {
      record.status = RunStatus::kDiverged;
      record.message = e.what();
      break;
    }
    const AgentMatrix& Theta = push_sa ? push.Theta : swarm.Theta;
    const bool capped = Theta.cwiseAbs().maxCoeff() > spec.iterate_cap;
    if (capped || spec.stride.records(t + 1, spec.horizon)) record_row(t + 1, steps);
    if (capped) {
      record.status = RunStatus::kCapped;
      record.message = "iterate magnitude exceeded the cap at t=" + std::to_string(t + 1);
      break;
    }
  }
  return record;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<const RunRecord*>& runs) {
  std::map<std::size_t, AggregateRow> by_t;
  for (const RunRecord* run : runs) {
    for (const MetricsRow& row : run->rows) {
      AggregateRow& agg = by_t[row.t];
      agg.mean.t = row.t;
      agg.mean.alpha += row.alpha;
      agg.mean.beta += row.beta;
      agg.mean.consensus_error += row.consensus_error;
      agg.mean.td_error_mean_abs += row.td_error_mean_abs;
      agg.mean.optimality_gap += row.optimality_gap;
      agg.mean.lyapunov += row.lyapunov;
      agg.mean.V_e += row.V_e;
      agg.mean.V_track += row.V_track;
      agg.mean.V_consensus += row.V_consensus;
      agg.mean.V_gap += row.V_gap;
      ++agg.runs;
    }
  }
  std::vector<AggregateRow> out;
  out.reserve(by_t.size());
  for (auto& [t, agg] : by_t) {
    const double k = static_cast<double>(agg.runs);
    MetricsRow& m = agg.mean;
    for (double* field : {&m.alpha, &m.beta, &m.consensus_error, &m.td_error_mean_abs, &m.optimality_gap,
                          &m.lyapunov, &m.V_e, &m.V_track, &m.V_consensus, &m.V_gap}) {
      *field /= k;
    }
    out.push_back(agg);
  }
  return out;
}

std::string format_aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::vector<MetricsRow> means;
  means.reserve(rows.size());
  for (const AggregateRow& row : rows) means.push_back(row.mean);
  // Same columns as a run file plus the number of runs averaged per row.
  const std::string base = format_csv(means);
  std::string out;
  std::size_t line = 0, pos = 0;
  while (pos < base.size()) {
    const std::size_t end = base.find('\n', pos);
    out.append(base, pos, end - pos);
    out += line == 0 ? std::string(",runs") : "," + std::to_string(rows[line - 1].runs);
    out += '\n';
    pos = end + 1;
    ++line;
  }
  return out;
}

ExperimentConfig apply_overrides(ExperimentConfig config, const RunnerOptions& options) {
  if (options.output_dir) config.output.dir = *options.output_dir;
  if (options.svg) config.output.svg = *options.svg;
  if (options.sparse_every) config.metrics.stride.sparse_every = *options.sparse_every;
  if (options.seed) config.seeds = {*options.seed};
  validate_config(config);
  return config;
}

void run_parallel(std::vector<std::function<void()>>& tasks, std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, tasks.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        tasks[k]();
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& thread : threads) thread.join();
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentSummary& summary) {
  const std::filesystem::path& dir = config.output.dir;
  for (const RunResult& run : summary.runs) {
    write_csv(run.record, dir / "runs" / run.algorithm /
                              ("seed" + std::to_string(run.seed_index) + "_" + std::to_string(run.record.seed) + ".csv"));
  }
  for (const auto& [name, rows] : summary.aggregates) {
    write_text_file(dir / "aggregate" / (name + ".csv"), format_aggregate_csv(rows));
  }
  emit_plotdata(summary.aggregates, dir / "plots", config.output.svg);

  json status = json::array();
  for (const RunResult& run : summary.runs) {
    status.push_back({{"algorithm", run.algorithm},
                      {"seed_index", run.seed_index},
                      {"seed", run.record.seed},
                      {"digest", run.record.config_digest},
                      {"status", std::string(to_string(run.record.status))},
                      {"message", run.record.message},
                      {"rows", run.record.rows.size()}});
  }
  write_text_file(dir / "runs.json", status.dump(2) + "\n");
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config, const Problem& problem,
                                 const RunnerOptions& options, bool write_outputs) {
  ExperimentSummary summary;
  summary.output_dir = config.output.dir;
  for (const AlgorithmSpec& algo : config.algorithms) {
    for (std::size_t k = 0; k < config.seeds.size(); ++k) {
      summary.runs.push_back(RunResult{algo.name, k, {}});
    }
  }

  std::vector<std::function<void()>> tasks;
  std::size_t unit = 0;
  for (const AlgorithmSpec& algo : config.algorithms) {
    for (std::size_t k = 0; k < config.seeds.size(); ++k, ++unit) {
      tasks.emplace_back([&, unit, k, algo_ptr = &algo] {
        RunSpec spec;
        spec.schedule = algo_ptr->schedule;
        spec.seed = config.seeds[k];
        spec.horizon = config.horizon;
        spec.stride = config.metrics.stride;
        spec.td_error_kind = config.metrics.td_error_kind;
        spec.iterate_cap = config.metrics.iterate_cap;
        spec.config_digest = run_digest(config, *algo_ptr, spec.schedule, spec.seed, spec.horizon);
        summary.runs[unit].record = run_single(problem, *algo_ptr, spec);
      });
    }
  }
  run_parallel(tasks, options.workers);

  for (const AlgorithmSpec& algo : config.algorithms) {
    std::vector<const RunRecord*> records;
    for (const RunResult& run : summary.runs) {
      if (run.algorithm == algo.name) records.push_back(&run.record);
    }
    summary.aggregates[algo.name] = aggregate_runs(records);
  }
  for (const RunResult& run : summary.runs) {
    if (run.record.status != RunStatus::kCompleted) ++summary.failed_runs;
  }
  if (write_outputs) write_experiment_outputs(config, summary);
  return summary;
}

ExperimentSummary run_experiment(const ExperimentConfig& raw_config, const RunnerOptions& options) {
  const ExperimentConfig config = apply_overrides(raw_config, options);
  const Problem problem = build_problem(config, options.base_dir);
  return run_experiment(config, problem, options, true);
}

// ---------------------------------------------------------------------------

StepSchedule schedule_at(const StepSchedule& base, double a, double b) {
  StepSchedule schedule = base;
  if (schedule.kind == ScheduleKind::kDecaying) {
    schedule.c0 = a;
  } else {
    schedule.alpha = a;
  }
  schedule.c_hat = b / a;
  return schedule;
}

std::pair<double, double> schedule_point(const StepSchedule& schedule) {
  const double a = schedule.kind == ScheduleKind::kDecaying ? schedule.c0 : schedule.alpha;
  return {a, schedule.c_hat * a};
}

std::vector<SweepChoice> select_best(const std::vector<SweepEntry>& table,
                                     const std::vector<AlgorithmSpec>& algorithms) {
  std::vector<SweepChoice> choices;
  for (const AlgorithmSpec& algo : algorithms) {
    SweepChoice choice;
    choice.algorithm = algo.name;
    std::tie(choice.a, choice.b) = schedule_point(algo.schedule);
    choice.final_td_error = std::numeric_limits<double>::infinity();
    for (char axis : {'a', 'b'}) {
      const SweepEntry* best = nullptr;
      for (const SweepEntry& entry : table) {
        if (entry.algorithm != algo.name || entry.axis != axis) continue;
        if (best == nullptr || entry.final_td_error < best->final_td_error ||
            (entry.final_td_error == best->final_td_error && entry.index < best->index)) {
          best = &entry;
        }
      }
      if (best != nullptr) {
        choice.a = best->a;
        choice.b = best->b;
        choice.final_td_error = best->final_td_error;
      }
    }
    choices.push_back(choice);
  }
  return choices;
}

std::string format_sweep_table(const std::vector<SweepEntry>& table) {
  std::string out = "algorithm,axis,index,a,b,final_td_error,failed_runs\n";
  for (const SweepEntry& e : table) {
    out += e.algorithm + ',' + e.axis + ',' + std::to_string(e.index) + ',' + format_number(e.a) + ',' +
           format_number(e.b) + ',' + (std::isinf(e.final_td_error) ? std::string("inf") : format_number(e.final_td_error)) +
           ',' + std::to_string(e.failed_runs) + '\n';
  }
  return out;
}

std::vector<SweepEntry> parse_sweep_table(std::string_view text) {
  std::vector<SweepEntry> table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::getline(in, line);
  if (line != "algorithm,axis,index,a,b,final_td_error,failed_runs") {
    throw InvalidArgument("unexpected sweep table header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 7 || fields[1].size() != 1) throw InvalidArgument("bad sweep table row: " + line);
    SweepEntry e;
    e.algorithm = fields[0];
    e.axis = fields[1][0];
    e.index = std::stoull(fields[2]);
    e.a = std::stod(fields[3]);
    e.b = std::stod(fields[4]);
    e.final_td_error = fields[5] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(fields[5]);
    e.failed_runs = std::stoull(fields[6]);
    table.push_back(e);
  }
  return table;
}

SweepSummary run_sweep(const ExperimentConfig& raw_config, const RunnerOptions& options) {
  const ExperimentConfig config = apply_overrides(raw_config, options);
  const Problem problem = build_problem(config, options.base_dir);
  const std::size_t horizon = config.sweep.horizon.value_or(config.horizon);
  const std::vector<double> a_grid = config.sweep.a.grid();
  const std::vector<double> b_grid = config.sweep.b.grid();

  // Only the final iterate matters for selection.
  StridePolicy final_only;
  final_only.dense_until = 0;
  final_only.sparse_every = horizon;

  auto evaluate = [&](const AlgorithmSpec& algo, char axis, const std::vector<std::pair<double, double>>& points) {
    const std::size_t seeds = config.seeds.size();
    std::vector<RunRecord> records(points.size() * seeds);
    std::vector<std::function<void()>> tasks;
    for (std::size_t p = 0; p < points.size(); ++p) {
      for (std::size_t k = 0; k < seeds; ++k) {
        tasks.emplace_back([&, p, k] {
          RunSpec spec;
          spec.schedule = schedule_at(algo.schedule, points[p].first, points[p].second);
          spec.seed = config.seeds[k];
          spec.horizon = horizon;
          spec.stride = final_only;
          spec.td_error_kind = config.metrics.td_error_kind;
          spec.iterate_cap = config.metrics.iterate_cap;
          spec.config_digest = run_digest(config, algo, spec.schedule, spec.seed, horizon);
          records[p * seeds + k] = run_single(problem, algo, spec);
        });
      }
    }
    run_parallel(tasks, options.workers);

    std::vector<SweepEntry> entries;
    for (std::size_t p = 0; p < points.size(); ++p) {
      SweepEntry e{algo.name, axis, p, points[p].first, points[p].second, 0.0, 0};
      double total = 0.0;
      for (std::size_t k = 0; k < seeds; ++k) {
        const RunRecord& r = records[p * seeds + k];
        if (r.status != RunStatus::kCompleted || r.rows.empty() || r.rows.back().t != horizon) {
          ++e.failed_runs;
        } else {
          total += r.rows.back().td_error_mean_abs;
        }
      }
      e.final_td_error = e.failed_runs > 0 ? std::numeric_limits<double>::infinity()
                                           : total / static_cast<double>(seeds);
      entries.push_back(e);
    }
    return entries;
  };

  SweepSummary summary;
  for (const AlgorithmSpec& algo : config.algorithms) {
    const auto [a0, b0] = schedule_point(algo.schedule);
    std::vector<std::pair<double, double>> a_points;
    for (double a : a_grid) a_points.emplace_back(a, b0);
    std::vector<SweepEntry> a_entries = evaluate(algo, 'a', a_points);
    summary.table.insert(summary.table.end(), a_entries.begin(), a_entries.end());

    if (algo.kind == AlgorithmKind::kPpdtd) {
      const double best_a = select_best(a_entries, {algo}).front().a;
      std::vector<std::pair<double, double>> b_points;
      for (double b : b_grid) b_points.emplace_back(best_a, b);
      std::vector<SweepEntry> b_entries = evaluate(algo, 'b', b_points);
      summary.table.insert(summary.table.end(), b_entries.begin(), b_entries.end());
    }
    (void)a0;
  }
  summary.choices = select_best(summary.table, config.algorithms);

  const std::filesystem::path dir = config.output.dir / "sweep";
  write_text_file(dir / "table.csv", format_sweep_table(summary.table));
  json report;
  report["selection_rule"] =
      "lowest across-seed mean final td_error_mean_abs; a swept with b fixed at its configured value, "
      "then b swept at the best a; failed runs count as +inf; ties go to the smaller grid index";
  report["horizon"] = horizon;
  report["a_grid"] = {{"min", config.sweep.a.min}, {"max", config.sweep.a.max}, {"points", config.sweep.a.points}};
  report["b_grid"] = {{"min", config.sweep.b.min}, {"max", config.sweep.b.max}, {"points", config.sweep.b.points}};
  json choices = json::array();
  for (const SweepChoice& c : summary.choices) {
    choices.push_back({{"algorithm", c.algorithm},
                       {"a", c.a},
                       {"b", c.b},
                       {"final_td_error", std::isinf(c.final_td_error) ? json(nullptr) : json(c.final_td_error)}});
  }
  report["choices"] = choices;
  write_text_file(dir / "sweep_report.json", report.dump(2) + "\n");

  ExperimentConfig best = config;
  for (std::size_t k = 0; k < best.algorithms.size(); ++k) {
    const SweepChoice& c = summary.choices[k];
    best.algorithms[k].schedule = schedule_at(best.algorithms[k].schedule, c.a, c.b);
  }
  summary.final_runs = run_experiment(best, problem, options, true);
  return summary;
}

// ---------------------------------------------------------------------------

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

json oracle_json(const ExperimentConfig& config, const Problem& p) {
  json report;
  const ExactSolution& e = p.exact;
  report["environment"] = {{"generator", std::string(to_string(config.environment.generator))},
                           {"num_states", p.mdp.num_states()},
                           {"num_agents", p.mdp.num_agents()},
                           {"num_joint_actions", p.mdp.num_joint_actions()},
                           {"gamma", p.mdp.gamma()},
                           {"r_max", p.mdp.r_max()}};
  report["theta_star"] = vector_json(e.theta_star);
  report["residual_inf"] = (e.A * e.theta_star + e.b_mean).lpNorm<Eigen::Infinity>();
  report["omega"] = e.omega;
  report["lambda_max_A_plus_At"] = e.lambda_max_sym;
  report["sigma_sq"] = e.sigma_sq;
  report["sigma_sq_method"] = e.sigma_sq_exact ? "enumeration" : "monte_carlo";
  if (!e.sigma_sq_exact) report["sigma_sq_stderr"] = e.sigma_sq_stderr;
  report["theta_star_norm"] = e.theta_star.norm();

  const SpectralProfile& s = p.spectral;
  report["network"] = {{"nodes", p.graph.num_nodes()},
                       {"edges", p.graph.num_edges()},
                       {"uv", p.mixing.uv},
                       {"u", vector_json(p.mixing.u)},
                       {"v", vector_json(p.mixing.v)}};
  report["spectral_proxies"] = {{"note", "proxies for existential constants; not certified bounds"},
                                {"spectral_radius_W_deflated", s.spectral_radius_W},
                                {"spectral_radius_M_deflated", s.spectral_radius_M},
                                {"rho_W", s.rho_W_proxy},
                                {"rho_M", s.rho_M_proxy},
                                {"c_bar", s.c_bar_proxy},
                                {"norm_W_minus_I_fro", s.norm_W_minus_I},
                                {"warnings", s.warnings}};

  try {
    const std::vector<double> alphas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    const MixingFit fit = fit_mixing_constant(p.chain.P, p.chain.d, alphas);
    report["mixing"] = {{"alphas", fit.alphas}, {"taus", fit.taus}, {"c_mix", fit.c_mix}};
  } catch (const CapExceeded& ex) {
    report["mixing"] = {{"error", ex.what()}};
  }

  ConstantsParams params = constants_params(p, config);
  try {
    const ConstantsTable t = constants_table(params);
    json C = json::array();
    for (int i = 0; i < 4; ++i) {
      json row = json::array();
      for (int j = 0; j < 4; ++j) row.push_back(t.C(i, j));
      C.push_back(row);
    }
    report["constants"] = {{"note", "estimate under spectral proxies"},
                           {"C", C},
                           {"c_hat", t.c_hat},
                           {"c_hat_floor", t.c_hat_floor},
                           {"c_prime", t.c_prime},
                           {"c_dprime", t.c_dprime},
                           {"c_min", t.c_min},
                           {"c_min_terms", t.c_min_terms},
                           {"markov",
                            {{"projection_radius", params.radius},
                             {"C_prime", t.markov.C_prime},
                             {"c_hat", t.markov.c_hat},
                             {"c_hat_floor", t.markov.c_hat_floor},
                             {"c1_prime", t.markov.c1_prime},
                             {"c1_dprime", t.markov.c1_dprime},
                             {"c_min", t.markov.c_min},
                             {"c_min_terms", t.markov.c_min_terms}}}};
  } catch (const InvalidArgument& ex) {
    report["constants"] = {{"error", ex.what()}};
  }
  return report;
}

}  // namespace

std::string oracle_report_json(const ExperimentConfig& config, const Problem& problem) {
  return oracle_json(config, problem).dump(2) + "\n";
}

std::string oracle_report_text(const ExperimentConfig& config, const Problem& problem) {
  const json r = oracle_json(config, problem);
  std::ostringstream out;
  out.precision(10);
  out << "states " << problem.mdp.num_states() << ", agents " << problem.mdp.num_agents() << ", features "
      << problem.features.dimension() << ", gamma " << problem.mdp.gamma() << "\n";
  out << "theta*      " << r["theta_star"].dump() << "\n";
  out << "residual    " << r["residual_inf"].get<double>() << "\n";
  out << "omega       " << problem.exact.omega << "\n";
  out << "sigma^2     " << problem.exact.sigma_sq << " (" << r["sigma_sq_method"].get<std::string>() << ")\n";
  out << "lambda_max(A+A^T) " << problem.exact.lambda_max_sym << "\n";
  out << "u^T v       " << problem.mixing.uv << "\n";
  out << "rho_W, rho_M, c_bar (proxies) " << problem.spectral.rho_W_proxy << ", " << problem.spectral.rho_M_proxy
      << ", " << problem.spectral.c_bar_proxy << "\n";
  for (const std::string& w : problem.spectral.warnings) out << "warning: " << w << "\n";
  if (r["mixing"].contains("c_mix")) out << "C_mix       " << r["mixing"]["c_mix"].get<double>() << "\n";
  const json& c = r["constants"];
  if (c.contains("C")) {
    out << "constants (estimate under spectral proxies)\n";
    for (const json& row : c["C"]) out << "  " << row.dump() << "\n";
    out << "c_hat " << c["c_hat"].get<double>() << " (floor " << c["c_hat_floor"].get<double>() << ")\n";
    out << "c' " << c["c_prime"].get<double>() << ", c'' " << c["c_dprime"].get<double>() << ", c_min "
        << c["c_min"].get<double>() << "\n";
    out << "markov: c_hat' " << c["markov"]["c_hat"].get<double>() << ", c'_1 " << c["markov"]["c1_prime"].get<double>()
        << ", c''_1 " << c["markov"]["c1_dprime"].get<double>() << ", c'_min " << c["markov"]["c_min"].get<double>()
        << "\n";
  } else {
    out << "constants unavailable: " << c["error"].get<std::string>() << "\n";
  }
  return out.str();
}

}  // namespace ppdtd
