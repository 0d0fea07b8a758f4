#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ppdtd {

/// Directed communication graph. Edge (i, j) means node j can send to node i.
class Digraph {
 public:
  explicit Digraph(std::size_t num_nodes);

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  /// Self-loops are rejected; duplicates are ignored.
  void add_edge(std::size_t receiver, std::size_t sender);
  bool has_edge(std::size_t receiver, std::size_t sender) const;
  const std::set<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }

  /// Nodes j with (i, j): the nodes i pulls from.
  std::vector<std::size_t> in_neighbors(std::size_t i) const;
  /// Nodes j with (j, i): the nodes i pushes to.
  std::vector<std::size_t> out_neighbors(std::size_t i) const;

  /// Reversed graph: (i, j) becomes (j, i).
  Digraph transpose() const;

  /// Nodes from which every node can be reached along the direction of
  /// information flow (the roots of spanning trees).
  std::vector<std::size_t> roots() const;
  bool strongly_connected() const;

 private:
  std::size_t n_;
  std::set<std::pair<std::size_t, std::size_t>> edges_;
};

/// Directed ring where node i receives from i+1 (mod n), plus every other
/// ordered pair independently with probability p (pairs visited in
/// ascending (receiver, sender) order).
Digraph ring_plus_random(std::size_t n, double p, std::uint64_t seed);

/// Edge lists are text files with one "i j" pair per line (0-indexed,
/// meaning j sends to i). Blank lines and lines starting with '#' are skipped.
/// When num_nodes is 0 it is inferred from the largest index.
Digraph read_edge_list(const std::filesystem::path& path, std::size_t num_nodes = 0);
void write_edge_list(const Digraph& graph, const std::filesystem::path& path);

struct RootCheck {
  bool holds = false;
  std::vector<std::size_t> roots_W;
  std::vector<std::size_t> roots_Mt;
  std::optional<std::size_t> common_root;
};

/// Both graphs must contain a spanning tree and share a root.
RootCheck check_common_root(const Digraph& g_W, const Digraph& g_Mt);

struct MixingMatrices {
  Eigen::MatrixXd W;  ///< row stochastic
  Eigen::MatrixXd M;  ///< column stochastic
  Eigen::VectorXd u;  ///< u^T W = u^T, u^T 1 = n
  Eigen::VectorXd v;  ///< M v = v, v^T 1 = n
  double uv = 0.0;    ///< u^T v

  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(W.rows()); }
};

struct EigenOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 1'000'000;
};

/// Uniform weights over in-neighbors plus self (W) and over out-neighbors plus
/// self (M columns). Throws AssumptionViolation when the graph has no root.
MixingMatrices build_weights(const Digraph& graph, const EigenOptions& options = {});

/// Validates a user-supplied pair and computes u, v. Throws InvalidArgument on
/// stochasticity or diagonal violations and NoConvergence on eigen stalls.
MixingMatrices make_mixing(Eigen::MatrixXd W, Eigen::MatrixXd M, const EigenOptions& options = {});

/// Spectral diagnostics standing in for the existential constants of the
/// convergence analysis. These are proxies, not certified bounds.
struct SpectralProfile {
  double spectral_radius_W = 0.0;  ///< rho(W - 1 u^T / n)
  double spectral_radius_M = 0.0;  ///< rho(M - v 1^T / n)
  double rho_W_proxy = 1.0;        ///< 1 - spectral_radius_W
  double rho_M_proxy = 1.0;        ///< 1 - spectral_radius_M
  double c_bar_proxy = 1.0;        ///< eigenbasis conditioning, >= 1
  double norm_W_minus_I = 0.0;     ///< Frobenius norm
  std::vector<std::string> warnings;
};

SpectralProfile spectral_profile(const MixingMatrices& mm);

}  // namespace ppdtd
