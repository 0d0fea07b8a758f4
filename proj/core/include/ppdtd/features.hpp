#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace ppdtd {

/// Linear feature map Phi (S x d); row s is phi(s)^T.
///
/// Construction enforces ||phi(s)||_2 <= 1 for every s and full column rank.
class FeatureMap {
 public:
  /// Throws InvalidArgument when a row norm exceeds 1 and RankDeficient when
  /// the smallest singular value is at most 1e-10.
  explicit FeatureMap(Eigen::MatrixXd phi);

  const Eigen::MatrixXd& matrix() const noexcept { return phi_; }
  std::size_t num_states() const noexcept { return static_cast<std::size_t>(phi_.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(phi_.cols()); }
  double operator()(std::size_t s, std::size_t k) const {
    return phi_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k));
  }
  /// Pointer to the d contiguous entries of phi(s).
  const double* row(std::size_t s) const { return phi_row_major_.data() + s * dimension(); }

 private:
  Eigen::MatrixXd phi_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi_row_major_;
};

inline constexpr double kRankTolerance = 1e-10;

/// Identity features (S = d): the tabular special case.
FeatureMap tabular_features(std::size_t num_states);

/// Gaussian RBF features on the state index line: centers are drawn without
/// replacement from {0, ..., S-1}, phi_k(s) = exp(-(s - c_k)^2 / (2 h^2)), and
/// the whole matrix is divided by its largest row norm.
FeatureMap rbf_features(std::size_t num_states, std::size_t num_centers, double bandwidth,
                        std::uint64_t seed);

/// Same construction with Euclidean distances between rows of `coordinates`
/// (one row per state) instead of state indices.
FeatureMap rbf_features(const Eigen::MatrixXd& coordinates, std::size_t num_centers,
                        double bandwidth, std::uint64_t seed);

struct FeatureDiagnostics {
  double max_row_norm = 0.0;
  double sigma_min = 0.0;
  /// lambda_min(Phi^T diag(d) Phi); present when a distribution was supplied.
  std::optional<double> omega;
};

FeatureDiagnostics validate_features(const FeatureMap& features,
                                     const Eigen::VectorXd* distribution = nullptr);

/// lambda_min(Phi^T diag(d) Phi).
double feature_gram_min_eigenvalue(const FeatureMap& features, const Eigen::VectorXd& d);

}  // namespace ppdtd
