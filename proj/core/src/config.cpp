#include "ppdtd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#ifdef PPDTD_VENDORED_JSON
#include "json.hpp"
#else
#include <nlohmann/json.hpp>
#endif

#include "ppdtd/errors.hpp"

namespace ppdtd {

using nlohmann::json;

// Seeds are read through the size_t overload below.
static_assert(std::is_same_v<std::uint64_t, std::size_t>, "size_t must be 64 bits");

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
  }

  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* find(std::string_view key) {
    const auto it = node_.find(std::string(key));
    if (it == node_.end()) return nullptr;
    seen_.insert(std::string(key));
    return &*it;
  }

  template <typename T>
  bool get(std::string_view key, T& out) {
    const json* value = find(key);
    if (value == nullptr) return false;
    convert(*value, child(key), out);
    return true;
  }

  template <typename T>
  void require(std::string_view key, T& out) {
    if (!get(key, out)) fail(child(key), "missing required field");
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (seen_.count(it.key()) == 0) fail(child(it.key()), "unknown key");
    }
  }

  static void convert(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) fail(path, "expected a number");
    out = v.get<double>();
  }
  static void convert(const json& v, const std::string& path, std::size_t& out) {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "expected a nonnegative integer");
    out = v.get<std::size_t>();
  }
  static void convert(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    out = v.get<bool>();
  }
  static void convert(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) fail(path, "expected a string");
    out = v.get<std::string>();
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(const std::string& text, const std::string& path,
                std::initializer_list<std::pair<std::string_view, Enum>> options) {
  std::string expected;
  for (const auto& [name, value] : options) {
    if (text == name) return value;
    expected += (expected.empty() ? "" : " | ") + std::string(name);
  }
  Reader::fail(path, "'" + text + "' is not one of " + expected);
}

template <typename Enum>
void get_enum(Reader& reader, std::string_view key, Enum& out,
              std::initializer_list<std::pair<std::string_view, Enum>> options) {
  std::string text;
  if (reader.get(key, text)) out = parse_enum(text, reader.child(key), options);
}

const std::initializer_list<std::pair<std::string_view, EnvironmentKind>> kEnvironmentNames = {
    {"cooperative_navigation", EnvironmentKind::kCooperativeNavigation},
    {"factored_navigation", EnvironmentKind::kFactoredNavigation},
    {"random_mdp", EnvironmentKind::kRandomMdp}};
const std::initializer_list<std::pair<std::string_view, RewardNoise>> kNoiseNames = {
    {"none", RewardNoise::kNone}, {"bernoulli", RewardNoise::kBernoulli}};
const std::initializer_list<std::pair<std::string_view, PolicyKind>> kPolicyNames = {
    {"uniform", PolicyKind::kUniform}, {"random", PolicyKind::kRandom}};
const std::initializer_list<std::pair<std::string_view, FeatureKind>> kFeatureNames = {
    {"rbf", FeatureKind::kRbf}, {"tabular", FeatureKind::kTabular}};
const std::initializer_list<std::pair<std::string_view, GraphKind>> kGraphNames = {
    {"ring_plus_random", GraphKind::kRingPlusRandom}, {"edge_list", GraphKind::kEdgeList}};
const std::initializer_list<std::pair<std::string_view, AlgorithmKind>> kAlgorithmNames = {
    {"ppdtd", AlgorithmKind::kPpdtd}, {"push_sa", AlgorithmKind::kPushSa}};
const std::initializer_list<std::pair<std::string_view, SamplingMode>> kModeNames = {
    {"iid", SamplingMode::kIid}, {"markov", SamplingMode::kMarkov}};
const std::initializer_list<std::pair<std::string_view, ScheduleKind>> kScheduleNames = {
    {"decaying", ScheduleKind::kDecaying}, {"constant", ScheduleKind::kConstant}};
const std::initializer_list<std::pair<std::string_view, TdErrorKind>> kTdNames = {
    {"value_error", TdErrorKind::kValueError}, {"bellman_residual", TdErrorKind::kBellmanResidual}};

template <typename Enum>
std::string name_of(Enum value, std::initializer_list<std::pair<std::string_view, Enum>> options) {
  for (const auto& [name, v] : options) {
    if (v == value) return std::string(name);
  }
  return "?";
}

void parse_environment(Reader r, EnvironmentSpec& env) {
  get_enum(r, "generator", env.generator, kEnvironmentNames);
  r.get("agents", env.agents);
  r.get("grid_side", env.grid_side);
  r.get("collision_penalty", env.collision_penalty);
  r.get("num_states", env.num_states);
  r.get("actions_per_agent", env.actions_per_agent);
  r.get("r_max", env.r_max);
  r.get("gamma", env.gamma);
  r.get("seed", env.seed);
  get_enum(r, "reward_noise", env.reward_noise, kNoiseNames);
  r.get("max_triples", env.max_triples);
  get_enum(r, "policy", env.policy, kPolicyNames);
  r.get("policy_seed", env.policy_seed);
  r.finish();
}

void parse_features(Reader r, FeatureSpec& features) {
  get_enum(r, "kind", features.kind, kFeatureNames);
  r.get("dimension", features.dimension);
  r.get("bandwidth", features.bandwidth);
  r.get("seed", features.seed);
  r.finish();
}

void parse_graph(Reader r, GraphSpec& graph) {
  get_enum(r, "kind", graph.kind, kGraphNames);
  r.get("p", graph.p);
  r.get("seed", graph.seed);
  std::string path;
  if (r.get("path", path)) graph.path = path;
  r.finish();
}

void parse_schedule(Reader r, StepSchedule& schedule) {
  get_enum(r, "kind", schedule.kind, kScheduleNames);
  r.get("alpha", schedule.alpha);
  r.get("c0", schedule.c0);
  r.get("t0", schedule.t0);
  r.get("c1", schedule.c1);
  r.get("beta_ratio", schedule.c_hat);
  r.finish();
}

AlgorithmSpec parse_algorithm(Reader r) {
  AlgorithmSpec algo;
  r.require("name", algo.name);
  get_enum(r, "kind", algo.kind, kAlgorithmNames);
  get_enum(r, "mode", algo.mode, kModeNames);
  if (const json* schedule = r.find("schedule")) parse_schedule(Reader(*schedule, r.child("schedule")), algo.schedule);
  r.get("projection_radius", algo.projection_radius);
  r.get("independent_samples", algo.independent_samples);
  r.finish();
  return algo;
}

void parse_axis(Reader r, SweepAxis& axis) {
  r.get("min", axis.min);
  r.get("max", axis.max);
  r.get("points", axis.points);
  r.finish();
}

void parse_sweep(Reader r, SweepSpec& sweep) {
  r.get("enabled", sweep.enabled);
  if (const json* a = r.find("a")) parse_axis(Reader(*a, r.child("a")), sweep.a);
  if (const json* b = r.find("b")) parse_axis(Reader(*b, r.child("b")), sweep.b);
  std::size_t horizon = 0;
  if (r.get("horizon", horizon)) sweep.horizon = horizon;
  r.finish();
}

void parse_metrics(Reader r, MetricsSpec& metrics) {
  get_enum(r, "td_error_kind", metrics.td_error_kind, kTdNames);
  r.get("dense_until", metrics.stride.dense_until);
  r.get("sparse_every", metrics.stride.sparse_every);
  r.get("iterate_cap", metrics.iterate_cap);
  r.finish();
}

void parse_output(Reader r, OutputSpec& output) {
  std::string dir;
  if (r.get("dir", dir)) output.dir = dir;
  r.get("svg", output.svg);
  r.finish();
}

}  // namespace

std::vector<double> SweepAxis::grid() const {
  std::vector<double> values(points);
  for (std::size_t k = 0; k < points; ++k) {
    values[k] = points == 1 ? min
                            : min + (max - min) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return values;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }

  ExperimentConfig config;
  Reader r(root, "");
  if (const json* env = r.find("environment")) parse_environment(Reader(*env, "environment"), config.environment);
  if (const json* features = r.find("features")) parse_features(Reader(*features, "features"), config.features);
  if (const json* graph = r.find("graph")) parse_graph(Reader(*graph, "graph"), config.graph);
  if (const json* algos = r.find("algorithms")) {
    if (!algos->is_array()) Reader::fail("algorithms", "expected an array");
    for (std::size_t k = 0; k < algos->size(); ++k) {
      config.algorithms.push_back(parse_algorithm(Reader((*algos)[k], "algorithms[" + std::to_string(k) + "]")));
    }
  }
  r.get("horizon", config.horizon);
  if (const json* seeds = r.find("seeds")) {
    if (!seeds->is_array()) Reader::fail("seeds", "expected an array");
    config.seeds.clear();
    for (std::size_t k = 0; k < seeds->size(); ++k) {
      std::uint64_t seed = 0;
      Reader::convert((*seeds)[k], "seeds[" + std::to_string(k) + "]", seed);
      config.seeds.push_back(seed);
    }
  }
  if (const json* sweep = r.find("sweep")) parse_sweep(Reader(*sweep, "sweep"), config.sweep);
  if (const json* metrics = r.find("metrics")) parse_metrics(Reader(*metrics, "metrics"), config.metrics);
  if (const json* output = r.find("output")) parse_output(Reader(*output, "output"), config.output);
  if (const json* theta0 = r.find("theta0")) {
    if (!theta0->is_array()) Reader::fail("theta0", "expected an array of numbers");
    for (std::size_t k = 0; k < theta0->size(); ++k) {
      double value = 0.0;
      Reader::convert((*theta0)[k], "theta0[" + std::to_string(k) + "]", value);
      config.theta0.push_back(value);
    }
  }
  double c_hat = 0.0;
  if (r.get("c_hat", c_hat)) config.c_hat = c_hat;
  if (r.get("c_hat_markov", c_hat)) config.c_hat_markov = c_hat;
  r.finish();

  validate_config(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& path, const std::string& what) { Reader::fail(path, what); };
  const EnvironmentSpec& env = c.environment;
  if (env.agents == 0) fail("environment.agents", "must be at least 1");
  if (!(env.gamma > 0.0 && env.gamma < 1.0)) fail("environment.gamma", "must lie in (0, 1)");
  if (!(env.r_max >= 0.0)) fail("environment.r_max", "must be >= 0");
  if (env.generator != EnvironmentKind::kRandomMdp && env.grid_side < 2) fail("environment.grid_side", "must be at least 2");
  if (env.generator == EnvironmentKind::kCooperativeNavigation && env.agents < 2) {
    fail("environment.agents", "cooperative navigation needs at least 2 agents");
  }
  if (c.features.kind == FeatureKind::kRbf) {
    if (c.features.dimension == 0) fail("features.dimension", "must be at least 1");
    if (!(c.features.bandwidth > 0.0)) fail("features.bandwidth", "must be positive");
  }
  if (c.graph.kind == GraphKind::kRingPlusRandom) {
    if (!(c.graph.p >= 0.0 && c.graph.p <= 1.0)) fail("graph.p", "must lie in [0, 1]");
    if (env.agents < 3) fail("environment.agents", "ring_plus_random needs at least 3 agents");
  } else if (c.graph.path.empty()) {
    fail("graph.path", "required for edge_list graphs");
  }
  if (c.algorithms.empty()) fail("algorithms", "at least one algorithm is required");
  std::set<std::string> names;
  for (std::size_t k = 0; k < c.algorithms.size(); ++k) {
    const AlgorithmSpec& a = c.algorithms[k];
    const std::string path = "algorithms[" + std::to_string(k) + "]";
    if (a.name.empty() || a.name.find_first_of("/\\ ") != std::string::npos) {
      fail(path + ".name", "must be nonempty without spaces or slashes");
    }
    if (!names.insert(a.name).second) fail(path + ".name", "duplicate algorithm name '" + a.name + "'");
    try {
      a.schedule.validate();
    } catch (const InvalidArgument& e) {
      fail(path + ".schedule", e.what());
    }
    if (a.projection_radius < 0.0) fail(path + ".projection_radius", "must be >= 0");
    if (a.mode == SamplingMode::kMarkov && a.kind == AlgorithmKind::kPpdtd && !(a.projection_radius > 0.0)) {
      fail(path + ".projection_radius", "markov mode needs a positive projection radius");
    }
    if (a.independent_samples && a.mode == SamplingMode::kMarkov) {
      fail(path + ".independent_samples", "only available in iid mode");
    }
  }
  if (c.horizon == 0) fail("horizon", "must be at least 1");
  if (c.seeds.empty()) fail("seeds", "at least one seed is required");
  if (c.sweep.enabled) {
    for (const auto& [axis, name] : {std::pair{&c.sweep.a, "sweep.a"}, std::pair{&c.sweep.b, "sweep.b"}}) {
      if (axis->points == 0) fail(std::string(name) + ".points", "grid must be nonempty");
      if (!(axis->min > 0.0) || !(axis->max >= axis->min)) fail(name, "need 0 < min <= max");
    }
    if (c.sweep.horizon && *c.sweep.horizon == 0) fail("sweep.horizon", "must be at least 1");
  }
  if (c.metrics.stride.sparse_every == 0) fail("metrics.sparse_every", "must be at least 1");
  if (!(c.metrics.iterate_cap > 0.0)) fail("metrics.iterate_cap", "must be positive");
}

std::string canonical_json(const ExperimentConfig& c) {
  json root;
  const EnvironmentSpec& env = c.environment;
  root["environment"] = {
      {"generator", name_of(env.generator, kEnvironmentNames)},
      {"agents", env.agents},
      {"grid_side", env.grid_side},
      {"collision_penalty", env.collision_penalty},
      {"num_states", env.num_states},
      {"actions_per_agent", env.actions_per_agent},
      {"r_max", env.r_max},
      {"gamma", env.gamma},
      {"seed", env.seed},
      {"reward_noise", name_of(env.reward_noise, kNoiseNames)},
      {"max_triples", env.max_triples},
      {"policy", name_of(env.policy, kPolicyNames)},
      {"policy_seed", env.policy_seed},
  };
  root["features"] = {{"kind", name_of(c.features.kind, kFeatureNames)},
                      {"dimension", c.features.dimension},
                      {"bandwidth", c.features.bandwidth},
                      {"seed", c.features.seed}};
  root["graph"] = {{"kind", name_of(c.graph.kind, kGraphNames)},
                   {"p", c.graph.p},
                   {"seed", c.graph.seed},
                   {"path", c.graph.path.generic_string()}};
  json algos = json::array();
  for (const AlgorithmSpec& a : c.algorithms) {
    algos.push_back({{"name", a.name},
                     {"kind", name_of(a.kind, kAlgorithmNames)},
                     {"mode", name_of(a.mode, kModeNames)},
                     {"schedule",
                      {{"kind", name_of(a.schedule.kind, kScheduleNames)},
                       {"alpha", a.schedule.alpha},
                       {"c0", a.schedule.c0},
                       {"t0", a.schedule.t0},
                       {"c1", a.schedule.c1},
                       {"beta_ratio", a.schedule.c_hat}}},
                     {"projection_radius", a.projection_radius},
                     {"independent_samples", a.independent_samples}});
  }
  root["algorithms"] = algos;
  root["horizon"] = c.horizon;
  root["seeds"] = c.seeds;
  json sweep = {{"enabled", c.sweep.enabled},
                {"a", {{"min", c.sweep.a.min}, {"max", c.sweep.a.max}, {"points", c.sweep.a.points}}},
                {"b", {{"min", c.sweep.b.min}, {"max", c.sweep.b.max}, {"points", c.sweep.b.points}}}};
  if (c.sweep.horizon) sweep["horizon"] = *c.sweep.horizon;
  root["sweep"] = sweep;
  root["metrics"] = {{"td_error_kind", name_of(c.metrics.td_error_kind, kTdNames)},
                     {"dense_until", c.metrics.stride.dense_until},
                     {"sparse_every", c.metrics.stride.sparse_every},
                     {"iterate_cap", c.metrics.iterate_cap}};
  root["output"] = {{"dir", c.output.dir.generic_string()}, {"svg", c.output.svg}};
  root["theta0"] = c.theta0;
  if (c.c_hat) root["c_hat"] = *c.c_hat;
  if (c.c_hat_markov) root["c_hat_markov"] = *c.c_hat_markov;
  return root.dump(2) + "\n";
}

std::string_view to_string(EnvironmentKind kind) noexcept {
  switch (kind) {
    case EnvironmentKind::kCooperativeNavigation:
      return "cooperative_navigation";
    case EnvironmentKind::kFactoredNavigation:
      return "factored_navigation";
    case EnvironmentKind::kRandomMdp:
      return "random_mdp";
  }
  return "?";
}

std::string_view to_string(AlgorithmKind kind) noexcept {
  return kind == AlgorithmKind::kPpdtd ? "ppdtd" : "push_sa";
}

std::string_view to_string(SamplingMode mode) noexcept {
  return mode == SamplingMode::kIid ? "iid" : "markov";
}

}  // namespace ppdtd
