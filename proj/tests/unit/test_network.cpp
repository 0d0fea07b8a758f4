#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "ppdtd/errors.hpp"
#include "ppdtd/network.hpp"
#include "ppdtd/rng.hpp"

namespace ppdtd {
namespace {

// Null vector of A by SVD, normalized to sum to `target`.
Eigen::VectorXd null_vector(const Eigen::MatrixXd& A, double target) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Eigen::VectorXd x = svd.matrixV().col(A.cols() - 1);
  return x * (target / x.sum());
}

TEST(Digraph, EdgesAndNeighbors) {
  Digraph g(3);
  g.add_edge(0, 1);
  g.add_edge(0, 1);
  g.add_edge(2, 0);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(1, 0));
  EXPECT_EQ(g.in_neighbors(0), (std::vector<std::size_t>{1}));
  EXPECT_EQ(g.out_neighbors(0), (std::vector<std::size_t>{2}));
  EXPECT_THROW(g.add_edge(1, 1), InvalidArgument);
  EXPECT_TRUE(g.transpose().has_edge(1, 0));
}

TEST(Digraph, RootsOfAChain) {
  // 0 -> 1 -> 2: only node 0 reaches everybody.
  Digraph g(3);
  g.add_edge(1, 0);
  g.add_edge(2, 1);
  EXPECT_EQ(g.roots(), (std::vector<std::size_t>{0}));
  EXPECT_FALSE(g.strongly_connected());
  EXPECT_EQ(g.transpose().roots(), (std::vector<std::size_t>{2}));
}

TEST(RingPlusRandom, RingAlwaysPresent) {
  for (double p : {0.0, 0.3, 1.0}) {
    const Digraph g = ring_plus_random(6, p, 4);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_TRUE(g.has_edge(i, (i + 1) % 6));
    EXPECT_TRUE(g.strongly_connected());
  }
  EXPECT_EQ(ring_plus_random(6, 0.0, 4).num_edges(), 6u);
  EXPECT_EQ(ring_plus_random(6, 1.0, 4).num_edges(), 30u);
}

TEST(MixingMatrices, InvariantsOnRandomGraphs) {
  Rng rng(2024);
  const double ps[] = {0.0, 0.3, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(48);
    const double p = ps[trial % 3];
    const MixingMatrices mm = build_weights(ring_plus_random(n, p, 100 + trial));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    const double nd = static_cast<double>(n);
    EXPECT_LE((mm.W * ones - ones).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((ones.transpose() * mm.M - ones.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((mm.u.transpose() * mm.W - mm.u.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((mm.M * mm.v - mm.v).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(mm.u.sum(), nd, 1e-10);
    EXPECT_NEAR(mm.v.sum(), nd, 1e-10);
    EXPECT_GT(mm.uv, 0.0);
    EXPECT_GE(mm.W.minCoeff(), 0.0);
    EXPECT_GE(mm.M.minCoeff(), 0.0);
    for (Eigen::Index i = 0; i < mm.W.rows(); ++i) {
      EXPECT_GT(mm.W(i, i), 0.0);
      EXPECT_GT(mm.M(i, i), 0.0);
    }
  }
}

TEST(MixingMatrices, PerronVectorsMatchSvdOracle) {
  const MixingMatrices mm = build_weights(ring_plus_random(12, 0.3, 9));
  const Eigen::Index n = mm.W.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  EXPECT_LE((null_vector(mm.W.transpose() - I, 12.0) - mm.u).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((null_vector(mm.M - I, 12.0) - mm.v).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MixingMatrices, UniformWeightsByDegree) {
  Digraph g(3);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 0);
  g.add_edge(2, 0);
  const MixingMatrices mm = build_weights(g);
  EXPECT_DOUBLE_EQ(mm.W(0, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mm.W(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(mm.W(1, 1), 0.5);
  // Node 0 pushes to 1 and 2.
  EXPECT_DOUBLE_EQ(mm.M(1, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mm.M(2, 0), 1.0 / 3.0);
}

TEST(MixingMatrices, NoCommonRootIsRejected) {
  Digraph g(3);
  g.add_edge(1, 0);  // node 2 is isolated
  EXPECT_THROW(build_weights(g), AssumptionViolation);
}

TEST(MixingMatrices, SingleRootChainHolds) {
  Digraph g(3);
  g.add_edge(1, 0);
  g.add_edge(2, 1);
  const RootCheck check = check_common_root(g, g.transpose().transpose());
  EXPECT_TRUE(check.holds);
  ASSERT_TRUE(check.common_root.has_value());
  EXPECT_EQ(*check.common_root, 0u);
}

TEST(MakeMixing, RejectsNonStochastic) {
  Eigen::MatrixXd W(2, 2), M(2, 2);
  W << 0.5, 0.6, 0.5, 0.5;
  M << 0.5, 0.5, 0.5, 0.5;
  EXPECT_THROW(make_mixing(W, M), InvalidArgument);
}

TEST(SpectralProfile, CompleteGraphMixesInOneStep) {
  const MixingMatrices mm = build_weights(ring_plus_random(5, 1.0, 1));
  const SpectralProfile sp = spectral_profile(mm);
  EXPECT_NEAR(sp.spectral_radius_W, 0.0, 1e-8);
  EXPECT_NEAR(sp.spectral_radius_M, 0.0, 1e-8);
  EXPECT_NEAR(sp.rho_W_proxy, 1.0, 1e-8);
  EXPECT_GE(sp.c_bar_proxy, 1.0);
  EXPECT_GT(sp.norm_W_minus_I, 0.0);
}

TEST(SpectralProfile, RingIsSlowerThanDenseGraph) {
  const SpectralProfile ring = spectral_profile(build_weights(ring_plus_random(10, 0.0, 1)));
  const SpectralProfile dense = spectral_profile(build_weights(ring_plus_random(10, 0.6, 1)));
  EXPECT_LT(ring.rho_W_proxy, dense.rho_W_proxy);
  EXPECT_GT(ring.rho_W_proxy, 0.0);
}

TEST(EdgeList, RoundTrip) {
  const Digraph g = ring_plus_random(7, 0.3, 5);
  const auto path = std::filesystem::temp_directory_path() / "ppdtd_edges_roundtrip.txt";
  write_edge_list(g, path);
  const Digraph back = read_edge_list(path, 7);
  EXPECT_EQ(back.edges(), g.edges());
  EXPECT_EQ(read_edge_list(path).num_nodes(), 7u);
  std::filesystem::remove(path);
}

TEST(EdgeList, MissingFileIsIoFailure) {
  EXPECT_THROW(read_edge_list("/nonexistent/edges.txt"), IoFailure);
}

}  // namespace
}  // namespace ppdtd
