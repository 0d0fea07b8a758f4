#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <atomic>

#include "ppdtd/config.hpp"
#include "ppdtd/errors.hpp"
#include "ppdtd/experiment.hpp"
#include "ppdtd/plotdata.hpp"

namespace ppdtd {
namespace {

namespace fs = std::filesystem;

const char* kDesk = R"({
  "environment": { "generator": "random_mdp", "agents": 5, "num_states": 3, "gamma": 0.7, "seed": 7 },
  "features": { "kind": "rbf", "dimension": 2, "seed": 3 },
  "graph": { "kind": "ring_plus_random", "p": 0.3, "seed": 11 },
  "algorithms": [
    { "name": "pp", "kind": "ppdtd", "mode": "iid",
      "schedule": { "kind": "decaying", "c0": 5.0, "beta_ratio": 0.2 } },
    { "name": "psa", "kind": "push_sa", "mode": "iid",
      "schedule": { "kind": "decaying", "c0": 5.0 } }
  ],
  "horizon": 200,
  "seeds": [4, 4],
  "output": { "dir": "unused" }
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ppdtd_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TEST(Experiment, MinimalRunWritesOneRow) {
  ExperimentConfig c = parse_config(kDesk);
  c.horizon = 1;
  c.seeds = {1};
  c.algorithms.resize(1);
  RunnerOptions options;
  options.output_dir = scratch("minimal");
  const ExperimentSummary summary = run_experiment(c, options);
  ASSERT_EQ(summary.runs.size(), 1u);
  EXPECT_EQ(summary.runs[0].record.rows.size(), 1u);
  const fs::path run_csv = *options.output_dir / "runs" / "pp" / "seed0_1.csv";
  ASSERT_TRUE(fs::exists(run_csv));
  EXPECT_EQ(read_csv(run_csv).size(), 1u);
  EXPECT_TRUE(fs::exists(*options.output_dir / "aggregate" / "pp.csv"));
  EXPECT_TRUE(fs::exists(*options.output_dir / "plots" / "td_error_mean_abs.csv"));
  fs::remove_all(*options.output_dir);
}

TEST(Experiment, IdenticalSeedsGiveIdenticalFiles) {
  ExperimentConfig c = parse_config(kDesk);
  RunnerOptions options;
  options.output_dir = scratch("identical");
  options.workers = 2;
  run_experiment(c, options);
  for (const char* algo : {"pp", "psa"}) {
    const fs::path dir = *options.output_dir / "runs" / algo;
    EXPECT_EQ(slurp(dir / "seed0_4.csv"), slurp(dir / "seed1_4.csv")) << algo;
  }
  fs::remove_all(*options.output_dir);
}

TEST(Experiment, RepeatedRunsAreByteIdentical) {
  const ExperimentConfig c = parse_config(kDesk);
  RunnerOptions a, b;
  a.output_dir = scratch("repeat_a");
  b.output_dir = scratch("repeat_b");
  b.workers = 3;
  run_experiment(c, a);
  run_experiment(c, b);
  for (const auto& entry : fs::recursive_directory_iterator(*a.output_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), *a.output_dir);
    EXPECT_EQ(slurp(entry.path()), slurp(*b.output_dir / rel)) << rel;
  }
  fs::remove_all(*a.output_dir);
  fs::remove_all(*b.output_dir);
}

TEST(Experiment, RunDependsOnSeedNotName) {
  ExperimentConfig c = parse_config(kDesk);
  const Problem p = build_problem(c);
  RunSpec spec;
  spec.schedule = c.algorithms[0].schedule;
  spec.seed = 9;
  spec.horizon = 50;
  AlgorithmSpec renamed = c.algorithms[0];
  renamed.name = "other";
  const RunRecord a = run_single(p, c.algorithms[0], spec);
  const RunRecord b = run_single(p, renamed, spec);
  EXPECT_EQ(format_csv(a.rows), format_csv(b.rows));
  spec.seed = 10;
  EXPECT_NE(format_csv(run_single(p, renamed, spec).rows), format_csv(a.rows));
}

TEST(Experiment, DivergenceIsRecordedNotFatal) {
  ExperimentConfig c = parse_config(kDesk);
  c.algorithms[0].schedule.kind = ScheduleKind::kConstant;
  c.algorithms[0].schedule.alpha = 1e6;
  c.algorithms.resize(1);
  c.metrics.iterate_cap = 1e3;
  const Problem p = build_problem(c);
  ExperimentSummary s = run_experiment(c, p, RunnerOptions{}, false);
  EXPECT_EQ(s.failed_runs, 2u);
  EXPECT_NE(s.runs[0].record.status, RunStatus::kCompleted);
  EXPECT_FALSE(s.runs[0].record.message.empty());
}

TEST(Experiment, EdgeListGraph) {
  const fs::path dir = scratch("edges");
  fs::create_directories(dir);
  write_edge_list(ring_plus_random(5, 0.0, 1), dir / "ring.txt");
  std::string text = kDesk;
  const std::string needle = "\"kind\": \"ring_plus_random\", \"p\": 0.3, \"seed\": 11";
  text.replace(text.find(needle), needle.size(), "\"kind\": \"edge_list\", \"path\": \"ring.txt\"");
  const ExperimentConfig c = parse_config(text);
  const Problem p = build_problem(c, dir);
  EXPECT_EQ(p.graph.num_edges(), 5u);
  fs::remove_all(dir);
}

TEST(Experiment, Theta0LengthChecked) {
  ExperimentConfig c = parse_config(kDesk);
  c.theta0 = {1.0, 2.0, 3.0};
  EXPECT_THROW(build_problem(c), ConfigError);
}

TEST(Sweep, SelectionIsPureFunctionOfTable) {
  ExperimentConfig c = parse_config(kDesk);
  c.sweep.enabled = true;
  c.sweep.a = {0.5, 8.0, 4};
  c.sweep.b = {0.1, 2.0, 3};
  c.horizon = 300;
  c.seeds = {1, 2};
  RunnerOptions options;
  options.output_dir = scratch("sweep");
  const SweepSummary s = run_sweep(c, options);
  EXPECT_EQ(s.table.size(), 4u + 3u + 4u);
  const auto table = parse_sweep_table(slurp(*options.output_dir / "sweep" / "table.csv"));
  ASSERT_EQ(table.size(), s.table.size());
  const auto again = select_best(table, c.algorithms);
  ASSERT_EQ(again.size(), s.choices.size());
  for (std::size_t k = 0; k < again.size(); ++k) {
    EXPECT_EQ(again[k].algorithm, s.choices[k].algorithm);
    EXPECT_NEAR(again[k].a, s.choices[k].a, 1e-11);
    EXPECT_NEAR(again[k].b, s.choices[k].b, 1e-11);
  }
  EXPECT_TRUE(fs::exists(*options.output_dir / "sweep" / "sweep_report.json"));
  fs::remove_all(*options.output_dir);
}

TEST(Sweep, TiesGoToSmallerIndex) {
  std::vector<SweepEntry> table{{"x", 'a', 0, 1.0, 1.0, 0.5, 0}, {"x", 'a', 1, 2.0, 1.0, 0.5, 0},
                                {"x", 'b', 0, 1.0, 0.3, 0.7, 0}, {"x", 'b', 1, 1.0, 0.6, 0.4, 0}};
  AlgorithmSpec spec;
  spec.name = "x";
  const auto best = select_best(table, {spec});
  EXPECT_EQ(best[0].a, 1.0);
  EXPECT_EQ(best[0].b, 0.6);
}

TEST(Sweep, ScheduleMapping) {
  StepSchedule base;
  base.kind = ScheduleKind::kDecaying;
  const StepSchedule s = schedule_at(base, 2.0, 0.5);
  EXPECT_EQ(s.c0, 2.0);
  EXPECT_EQ(s.c_hat, 0.25);
  EXPECT_EQ(schedule_point(s), std::make_pair(2.0, 0.5));
}

TEST(PlotData, LongFormatSeries) {
  std::map<std::string, Series> series;
  series["a"] = {{1, 0.5}, {2, 0.25}};
  series["b"] = {{1, 1.0}};
  series["c"] = {{1, 2.0}};
  const std::string csv = plot_long_csv(series);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,series,value");
  EXPECT_NE(csv.find("2,a,0.250000000000"), std::string::npos);
  EXPECT_NE(csv.find("1,c,2.000000000000"), std::string::npos);
}

TEST(PlotData, SvgIsWellFormedXml) {
  std::map<std::string, Series> series;
  series["pp<dtd>&"] = {{1, 0.5}, {10, 0.05}, {100, 0.0}};
  series["push_sa"] = {{1, 1.0}, {10, 0.2}};
  std::istringstream in(plot_svg(series, "td error \"mean\""));
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  EXPECT_EQ(tree.get_child("svg").count("polyline"), 2u);
}

TEST(RunParallel, RethrowsFailures) {
  std::vector<std::function<void()>> tasks;
  std::atomic<int> done{0};
  for (int k = 0; k < 8; ++k) {
    tasks.emplace_back([&, k] {
      if (k == 3) throw std::runtime_error("boom");
      ++done;
    });
  }
  EXPECT_THROW(run_parallel(tasks, 3), std::runtime_error);
  EXPECT_EQ(done.load(), 7);
}

TEST(OracleReport, ContainsKeyQuantities) {
  const ExperimentConfig c = parse_config(kDesk);
  const Problem p = build_problem(c);
  const std::string json = oracle_report_json(c, p);
  for (const char* key : {"theta_star", "omega", "sigma_sq", "spectral_proxies", "constants", "c_mix"}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
  EXPECT_NE(oracle_report_text(c, p).find("theta*"), std::string::npos);
}

}  // namespace
}  // namespace ppdtd
