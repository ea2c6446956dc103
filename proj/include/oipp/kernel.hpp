#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "oipp/types.hpp"

namespace oipp {

/// RBF kernel hyperparameters plus the Gaussian observation-noise variance.
///
/// Values are stored as logarithms so every point of the optimization space
/// maps to a valid (strictly positive) parameter set.
class Hyperparameters {
 public:
  Hyperparameters() = default;

  /// Throws InputError unless all three values are finite and positive.
  static Hyperparameters from_natural(double lengthscale, double signal_variance,
                                      double noise_variance);
  static Hyperparameters from_log(const Eigen::Vector3d& log_params);

  [[nodiscard]] double lengthscale() const { return std::exp(log_(0)); }
  [[nodiscard]] double signal_variance() const { return std::exp(log_(1)); }
  [[nodiscard]] double noise_variance() const { return std::exp(log_(2)); }

  /// (log lengthscale, log signal variance, log noise variance).
  [[nodiscard]] const Eigen::Vector3d& log_params() const { return log_; }

  friend bool operator==(const Hyperparameters& a, const Hyperparameters& b) {
    return a.log_ == b.log_;
  }

 private:
  explicit Hyperparameters(const Eigen::Vector3d& log_params) : log_(log_params) {}
  Eigen::Vector3d log_ = Eigen::Vector3d::Zero();
};

/// Scale-aware starting point: lengthscale at 10% of the domain diagonal,
/// signal variance at the target variance (1 with fewer than two targets),
/// noise at 1% of the signal variance.
Hyperparameters default_hyperparameters(double domain_diagonal, const Eigen::VectorXd& targets);

struct LogBox {
  Eigen::Vector3d lower;
  Eigen::Vector3d upper;
};

/// Plausible hyperparameter range in log space for a domain of the given
/// diagonal: lengthscale in [0.005, 0.5] diagonals, signal variance within
/// four decades of `signal`, noise between 1e-6 and 10 times `signal`.
LogBox hyperparameter_box(double domain_diagonal, double signal = 1.0);

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
Eigen::MatrixXd squared_distances(const PointSet& a, const PointSet& b);

/// Squared-exponential covariance sf2 * exp(-|a_i - b_j|^2 / (2 l^2)).
Eigen::MatrixXd rbf_kernel(const PointSet& a, const PointSet& b, const Hyperparameters& hyper);

/// Same as rbf_kernel but from precomputed squared distances.
Eigen::MatrixXd rbf_from_distances(const Eigen::MatrixXd& sq_dist, const Hyperparameters& hyper);

struct JitterPolicy {
  double initial_relative = 1e-8;  // first non-zero jitter, times mean diagonal
  double max_relative = 1e-2;
  double growth = 10.0;
};

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // absolute value added to the diagonal
  std::vector<double> attempted;

  /// Solves (L L^T) X = B.
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  /// Solves L X = B.
  [[nodiscard]] Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;
  [[nodiscard]] double log_determinant() const;
};

/// Cholesky factor of `m + jitter * I`. The first attempt uses no jitter;
/// later attempts escalate geometrically from `initial_relative` up to
/// `max_relative` times the mean diagonal. Throws NumericalError listing
/// the attempted jitters when even the largest one fails.
CholeskyFactor cholesky_psd(const Eigen::MatrixXd& m, const JitterPolicy& policy = {});

/// First `k` pivots of a greedy diagonal-pivoted incomplete Cholesky of
/// K(candidates, candidates). Each step picks the candidate with the largest
/// residual variance, lowest index on ties.
std::vector<std::size_t> pivoted_cholesky_select(const PointSet& candidates, std::size_t k,
                                                 const Hyperparameters& hyper);

}  // namespace oipp
