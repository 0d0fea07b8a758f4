#include "ppdtd/features.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "ppdtd/errors.hpp"
#include "ppdtd/rng.hpp"

namespace ppdtd {

namespace {

double smallest_singular_value(const Eigen::MatrixXd& phi) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
  const auto& sv = svd.singularValues();
  return sv.size() == 0 ? 0.0 : sv(sv.size() - 1);
}

std::vector<std::size_t> draw_centers(std::size_t num_states, std::size_t num_centers,
                                      std::uint64_t seed) {
  Rng rng(seed, 0xfea7);
  std::vector<std::size_t> pool(num_states);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t k = 0; k < num_centers; ++k) {
    std::swap(pool[k], pool[k + rng.uniform_index(num_states - k)]);
  }
  pool.resize(num_centers);
  return pool;
}

FeatureMap normalized_rbf(const Eigen::MatrixXd& coordinates, std::size_t num_centers,
                          double bandwidth, std::uint64_t seed) {
  const auto S = static_cast<std::size_t>(coordinates.rows());
  if (num_centers == 0 || num_centers > S) {
    throw InvalidArgument("RBF needs 1 <= num_centers <= num_states");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument("RBF bandwidth must be positive");
  }
  const std::vector<std::size_t> centers = draw_centers(S, num_centers, seed);

  Eigen::MatrixXd phi(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(num_centers));
  const double denom = 2.0 * bandwidth * bandwidth;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k = 0; k < num_centers; ++k) {
      const double dist_sq =
          (coordinates.row(static_cast<Eigen::Index>(s)) -
           coordinates.row(static_cast<Eigen::Index>(centers[k])))
              .squaredNorm();
      phi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = std::exp(-dist_sq / denom);
    }
  }
  const double max_norm = phi.rowwise().norm().maxCoeff();
  phi /= max_norm;
  return FeatureMap(std::move(phi));
}

}  // namespace

FeatureMap::FeatureMap(Eigen::MatrixXd phi) : phi_(std::move(phi)) {
  if (phi_.rows() == 0 || phi_.cols() == 0) throw InvalidArgument("feature matrix is empty");
  if (!phi_.allFinite()) throw InvalidArgument("feature matrix has non-finite entries");
  for (Eigen::Index s = 0; s < phi_.rows(); ++s) {
    const double norm = phi_.row(s).norm();
    if (norm > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "feature row " << s << " has norm " << norm << " > 1";
      throw InvalidArgument(msg.str());
    }
  }
  if (phi_.cols() > phi_.rows()) throw RankDeficient("more features than states");
  const double sigma_min = smallest_singular_value(phi_);
  if (!(sigma_min > kRankTolerance)) {
    std::ostringstream msg;
    msg << "feature matrix is rank deficient (sigma_min = " << sigma_min << ")";
    throw RankDeficient(msg.str());
  }
  phi_row_major_ = phi_;
}

FeatureMap tabular_features(std::size_t num_states) {
  const auto S = static_cast<Eigen::Index>(num_states);
  return FeatureMap(Eigen::MatrixXd::Identity(S, S));
}

FeatureMap rbf_features(std::size_t num_states, std::size_t num_centers, double bandwidth,
                        std::uint64_t seed) {
  Eigen::MatrixXd coordinates(static_cast<Eigen::Index>(num_states), 1);
  for (std::size_t s = 0; s < num_states; ++s) {
    coordinates(static_cast<Eigen::Index>(s), 0) = static_cast<double>(s);
  }
  return normalized_rbf(coordinates, num_centers, bandwidth, seed);
}

FeatureMap rbf_features(const Eigen::MatrixXd& coordinates, std::size_t num_centers,
                        double bandwidth, std::uint64_t seed) {
  return normalized_rbf(coordinates, num_centers, bandwidth, seed);
}

double feature_gram_min_eigenvalue(const FeatureMap& features, const Eigen::VectorXd& d) {
  if (static_cast<std::size_t>(d.size()) != features.num_states()) {
    throw InvalidArgument("distribution length does not match the feature map");
  }
  const Eigen::MatrixXd& phi = features.matrix();
  const Eigen::MatrixXd gram = phi.transpose() * d.asDiagonal() * phi;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

FeatureDiagnostics validate_features(const FeatureMap& features, const Eigen::VectorXd* distribution) {
  FeatureDiagnostics diag;
  diag.max_row_norm = features.matrix().rowwise().norm().maxCoeff();
  diag.sigma_min = smallest_singular_value(features.matrix());
  if (distribution != nullptr) diag.omega = feature_gram_min_eigenvalue(features, *distribution);
  return diag;
}

}  // namespace ppdtd
