#include "ppdtd/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "ppdtd/errors.hpp"
#include "ppdtd/rng.hpp"

namespace ppdtd {

Digraph::Digraph(std::size_t num_nodes) : n_(num_nodes) {
  if (num_nodes == 0) throw InvalidArgument("graph needs at least one node");
}

void Digraph::add_edge(std::size_t receiver, std::size_t sender) {
  if (receiver >= n_ || sender >= n_) throw InvalidArgument("edge endpoint out of range");
  if (receiver == sender) throw InvalidArgument("self-loops are implicit and may not be listed");
  edges_.emplace(receiver, sender);
}

bool Digraph::has_edge(std::size_t receiver, std::size_t sender) const {
  return edges_.count({receiver, sender}) != 0;
}

std::vector<std::size_t> Digraph::in_neighbors(std::size_t i) const {
  std::vector<std::size_t> result;
  for (auto it = edges_.lower_bound({i, 0}); it != edges_.end() && it->first == i; ++it) {
    result.push_back(it->second);
  }
  return result;
}

std::vector<std::size_t> Digraph::out_neighbors(std::size_t i) const {
  std::vector<std::size_t> result;
  for (const auto& [receiver, sender] : edges_) {
    if (sender == i) result.push_back(receiver);
  }
  return result;
}

Digraph Digraph::transpose() const {
  Digraph reversed(n_);
  for (const auto& [receiver, sender] : edges_) reversed.add_edge(sender, receiver);
  return reversed;
}

std::vector<std::size_t> Digraph::roots() const {
  std::vector<std::vector<std::size_t>> pushes_to(n_);
  for (const auto& [receiver, sender] : edges_) pushes_to[sender].push_back(receiver);

  std::vector<std::size_t> result;
  for (std::size_t root = 0; root < n_; ++root) {
    std::vector<bool> seen(n_, false);
    std::deque<std::size_t> frontier{root};
    seen[root] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
      const std::size_t node = frontier.front();
      frontier.pop_front();
      for (std::size_t next : pushes_to[node]) {
        if (!seen[next]) {
          seen[next] = true;
          ++reached;
          frontier.push_back(next);
        }
      }
    }
    if (reached == n_) result.push_back(root);
  }
  return result;
}

bool Digraph::strongly_connected() const { return roots().size() == n_; }

Digraph ring_plus_random(std::size_t n, double p, std::uint64_t seed) {
  if (n < 3) throw InvalidArgument("ring_plus_random needs n >= 3");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("edge probability must lie in [0, 1]");
  Digraph graph(n);
  for (std::size_t i = 0; i < n; ++i) graph.add_edge(i, (i + 1) % n);
  Rng rng(seed, 0x6a9);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || j == (i + 1) % n) continue;
      if (rng.bernoulli(p)) graph.add_edge(i, j);
    }
  }
  return graph;
}

Digraph read_edge_list(const std::filesystem::path& path, std::size_t num_nodes) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open edge list " + path.string());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t largest = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long i = -1, j = -1;
    std::string extra;
    if (!(fields >> i >> j) || i < 0 || j < 0 || (fields >> extra)) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": expected two nonnegative node indices");
    }
    pairs.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    largest = std::max({largest, pairs.back().first, pairs.back().second});
  }
  if (num_nodes == 0) num_nodes = pairs.empty() ? 1 : largest + 1;
  Digraph graph(num_nodes);
  for (const auto& [i, j] : pairs) graph.add_edge(i, j);
  return graph;
}

void write_edge_list(const Digraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write edge list " + path.string());
  for (const auto& [receiver, sender] : graph.edges()) out << receiver << ' ' << sender << '\n';
  if (!out) throw IoFailure("write failed for " + path.string());
}

RootCheck check_common_root(const Digraph& g_W, const Digraph& g_Mt) {
  RootCheck check;
  check.roots_W = g_W.roots();
  check.roots_Mt = g_Mt.roots();
  for (std::size_t r : check.roots_W) {
    if (std::binary_search(check.roots_Mt.begin(), check.roots_Mt.end(), r)) {
      check.common_root = r;
      break;
    }
  }
  check.holds = check.common_root.has_value();
  return check;
}

namespace {

// Left Perron vector x^T A = x^T of a stochastic-like matrix, scaled to sum n.
Eigen::VectorXd perron_vector(const Eigen::MatrixXd& At, const EigenOptions& options,
                              const char* what) {
  const Eigen::Index n = At.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::VectorXd next = At * x;
    next *= static_cast<double>(n) / next.sum();
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (change <= options.tolerance) return x;
  }
  throw NoConvergence(std::string("power iteration for ") + what + " did not converge");
}

}  // namespace

MixingMatrices make_mixing(Eigen::MatrixXd W, Eigen::MatrixXd M, const EigenOptions& options) {
  const Eigen::Index n = W.rows();
  if (n == 0 || W.cols() != n || M.rows() != n || M.cols() != n) {
    throw InvalidArgument("mixing matrices must be square and of equal size");
  }
  if (!W.allFinite() || !M.allFinite() || W.minCoeff() < 0.0 || M.minCoeff() < 0.0) {
    throw InvalidArgument("mixing matrices must be finite and nonnegative");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(W.row(i).sum() - 1.0) > 1e-12) throw InvalidArgument("W is not row stochastic");
    if (std::abs(M.col(i).sum() - 1.0) > 1e-12) throw InvalidArgument("M is not column stochastic");
    if (!(W(i, i) > 0.0) || !(M(i, i) > 0.0)) {
      throw InvalidArgument("mixing matrices need strictly positive diagonals");
    }
  }

  MixingMatrices mm;
  mm.u = perron_vector(W.transpose(), options, "u");
  mm.v = perron_vector(M, options, "v");
  mm.uv = mm.u.dot(mm.v);
  if (!(mm.uv > 0.0)) throw AssumptionViolation("u^T v is not positive");
  mm.W = std::move(W);
  mm.M = std::move(M);
  return mm;
}

MixingMatrices build_weights(const Digraph& graph, const EigenOptions& options) {
  const std::size_t n = graph.num_nodes();
  // W and M share the communication graph, so M^T lives on its reverse.
  const RootCheck check = check_common_root(graph, graph.transpose());
  if (!check.holds) {
    throw AssumptionViolation("graph and its reverse share no spanning-tree root");
  }

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N, N);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto in = graph.in_neighbors(i);
    const double w = 1.0 / static_cast<double>(in.size() + 1);
    double row_sum = 0.0;
    for (std::size_t j : in) {
      W(ii, static_cast<Eigen::Index>(j)) = w;
      row_sum += w;
    }
    W(ii, ii) = 1.0 - row_sum;

    const auto out = graph.out_neighbors(i);
    const double m = 1.0 / static_cast<double>(out.size() + 1);
    double col_sum = 0.0;
    for (std::size_t j : out) {
      M(static_cast<Eigen::Index>(j), ii) = m;
      col_sum += m;
    }
    M(ii, ii) = 1.0 - col_sum;
  }
  return make_mixing(std::move(W), std::move(M), options);
}

namespace {

double spectral_radius(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Largest of ||V||_2 and ||V^{-1}||_2 for the unit-column eigenbasis of A.
std::pair<double, double> eigenbasis_norms(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, true);
  Eigen::MatrixXcd V = solver.eigenvectors();
  for (Eigen::Index k = 0; k < V.cols(); ++k) V.col(k).normalize();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  const double inverse_norm =
      smallest > 0.0 ? 1.0 / smallest : std::numeric_limits<double>::infinity();
  return {sv(0), inverse_norm};
}

}  // namespace

SpectralProfile spectral_profile(const MixingMatrices& mm) {
  const auto n = static_cast<Eigen::Index>(mm.num_nodes());
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  SpectralProfile profile;
  profile.spectral_radius_W = spectral_radius(mm.W - ones * mm.u.transpose() / nd);
  profile.spectral_radius_M = spectral_radius(mm.M - mm.v * ones.transpose() / nd);

  constexpr double kSlowMixing = 1.0 - 1e-9;
  auto proxy = [&](double radius, const char* name) {
    if (radius >= kSlowMixing) {
      profile.warnings.push_back(std::string("deflated ") + name +
                                 " has spectral radius near 1; mixing is very slow");
      return 1e-9;
    }
    return 1.0 - radius;
  };
  profile.rho_W_proxy = proxy(profile.spectral_radius_W, "W");
  profile.rho_M_proxy = proxy(profile.spectral_radius_M, "M");

  const auto [vw, vw_inv] = eigenbasis_norms(mm.W);
  const auto [vm, vm_inv] = eigenbasis_norms(mm.M);
  double c_bar = std::max({1.0, vw, vw_inv, vm, vm_inv, vw_inv * vm, vm_inv * vw});
  if (!std::isfinite(c_bar)) {
    profile.warnings.push_back("mixing matrix eigenbasis is singular; c_bar proxy is unbounded");
    c_bar = std::numeric_limits<double>::max();
  }
  profile.c_bar_proxy = c_bar;
  profile.norm_W_minus_I = (mm.W - Eigen::MatrixXd::Identity(n, n)).norm();
  return profile;
}

}  // namespace ppdtd
