#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppdtd/errors.hpp"
#include "ppdtd/metrics.hpp"

namespace ppdtd {
namespace {

TEST(ConsensusError, ZeroIffRowsEqual) {
  AgentMatrix Theta(3, 2);
  Theta << 1, 2, 1, 2, 1, 2;
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(3, 1.0);
  EXPECT_NEAR(consensus_error(Theta, u), 0.0, 1e-15);
  Theta(1, 0) = 1.5;
  EXPECT_GT(consensus_error(Theta, u), 0.0);
}

TEST(ConsensusError, WeightedAverage) {
  AgentMatrix Theta(2, 1);
  Theta << 0, 1;
  Eigen::VectorXd u(2);
  u << 1.5, 0.5;  // theta_bar = 0.25
  EXPECT_NEAR(consensus_error(Theta, u), (0.25 + 0.75) / 2.0, 1e-15);
}

TEST(TdError, TabularIdentity) {
  const TabularMdp mdp = random_mdp({3, 1, 2, 1.0, 0.9}, 3);
  const JointPolicy pi = JointPolicy::uniform(mdp);
  const PolicyChain chain = induce_chain(mdp, pi);
  const FeatureMap phi = tabular_features(3);
  const ExactSolution e = solve_theta_star(mdp, pi, chain, phi);
  AgentMatrix Theta = e.theta_star.transpose();
  EXPECT_NEAR(td_error_mean_abs(Theta, phi, e, chain), 0.0, 1e-15);
  EXPECT_NEAR(td_error_mean_abs(Theta, phi, e, chain, TdErrorKind::kBellmanResidual), 0.0, 1e-12);
  Theta(0, 1) += 0.3;
  EXPECT_NEAR(td_error_mean_abs(Theta, phi, e, chain), 0.1, 1e-15);
}

TEST(Stride, DefaultPolicy) {
  const StridePolicy p;
  EXPECT_TRUE(p.records(1, 100000));
  EXPECT_TRUE(p.records(10000, 100000));
  EXPECT_FALSE(p.records(10001, 100000));
  EXPECT_TRUE(p.records(10010, 100000));
  EXPECT_TRUE(p.records(99999, 99999));
}

TEST(FormatNumber, FixedTwelveDecimals) {
  EXPECT_EQ(format_number(0.5), "0.500000000000");
  EXPECT_EQ(format_number(-1.25e-3), "-0.001250000000");
  EXPECT_EQ(format_number(12.0), "12.000000000000");
}

TEST(Csv, EmptyRecordIsHeaderOnly) {
  EXPECT_EQ(format_csv({}), std::string(kCsvHeader) + "\n");
}

TEST(Csv, RoundTrip) {
  std::vector<MetricsRow> rows;
  for (std::size_t t = 1; t <= 3; ++t) {
    MetricsRow r;
    r.t = t;
    r.alpha = 1.0 / static_cast<double>(t + 5);
    r.beta = 0.5 * r.alpha;
    r.consensus_error = 1e-3 / static_cast<double>(t);
    r.td_error_mean_abs = 0.123456789012345;
    r.optimality_gap = 3.0 + static_cast<double>(t);
    r.lyapunov = 42.0;
    r.V_e = 1.0;
    r.V_track = 2.0;
    r.V_consensus = 3.0;
    r.V_gap = 4.0;
    rows.push_back(r);
  }
  const std::string text = format_csv(rows);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  const std::vector<MetricsRow> back = parse_csv(text);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].t, rows[k].t);
    EXPECT_NEAR(back[k].alpha, rows[k].alpha, 5e-13);
    EXPECT_NEAR(back[k].beta, rows[k].beta, 5e-13);
    EXPECT_NEAR(back[k].consensus_error, rows[k].consensus_error, 5e-13);
    EXPECT_NEAR(back[k].td_error_mean_abs, rows[k].td_error_mean_abs, 5e-13);
    EXPECT_NEAR(back[k].optimality_gap, rows[k].optimality_gap, 5e-13);
    EXPECT_NEAR(back[k].V_gap, rows[k].V_gap, 5e-13);
  }
  EXPECT_EQ(format_csv(back), text);
}

TEST(Csv, WriteAndRead) {
  RunRecord record;
  MetricsRow r;
  r.t = 7;
  r.alpha = 0.25;
  record.rows.push_back(r);
  const auto path = std::filesystem::temp_directory_path() / "ppdtd_metrics_test" / "run.csv";
  write_csv(record, path);
  const auto back = read_csv(path);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].t, 7u);
  EXPECT_EQ(back[0].alpha, 0.25);
  std::filesystem::remove_all(path.parent_path());
}

TEST(Csv, RejectsBadHeader) {
  EXPECT_THROW(parse_csv("t,alpha\n1,2\n"), InvalidArgument);
}

TEST(Csv, UnwritablePathIsIoFailure) {
  RunRecord record;
  EXPECT_THROW(write_csv(record, "/proc/ppdtd/not/writable.csv"), IoFailure);
}

}  // namespace
}  // namespace ppdtd
