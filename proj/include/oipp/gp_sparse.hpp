#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "oipp/kernel.hpp"
#include "oipp/optimizer.hpp"
#include "oipp/posterior.hpp"
#include "oipp/types.hpp"
#include "oipp/variational_bound.hpp"

namespace oipp {

/// Sparse variational GP posterior: inducing inputs Z, q(u) and the
/// hyperparameters it was built with. Predictive factors are cached at
/// construction so each query costs O(m^2) regardless of how much data
/// produced the posterior.
class SparseGPState final : public Posterior {
 public:
  SparseGPState(PointSet inducing, VariationalState q, const Hyperparameters& hyper);

  /// q(u) equal to the prior p(u) = N(0, K_uu).
  static SparseGPState prior(PointSet inducing, const Hyperparameters& hyper);

  [[nodiscard]] const PointSet& inducing() const { return inducing_; }
  [[nodiscard]] const VariationalState& variational() const { return q_; }
  [[nodiscard]] const Hyperparameters& hyper() const override { return hyper_; }
  [[nodiscard]] std::size_t inducing_count() const { return static_cast<std::size_t>(inducing_.rows()); }

  [[nodiscard]] std::vector<PosteriorPrediction> predict(const PointSet& query) const override;

  /// Mean and full covariance of q(f) at `query` (latent, no noise).
  [[nodiscard]] VariationalState joint(const PointSet& query) const;

 private:
  PointSet inducing_;
  VariationalState q_;
  Hyperparameters hyper_;
  CholeskyFactor k_uu_;
  Eigen::VectorXd alpha_;           // K_uu^{-1} q_mean
  Eigen::MatrixXd variance_reduce_;  // K_uu^{-1} - K_uu^{-1} S K_uu^{-1}
};

/// Titsias collapsed bound log N(y | 0, Q_ff + noise I) - tr(K_ff - Q_ff) / (2 noise).
double collapsed_elbo(const DataBatch& data, const PointSet& inducing, const Hyperparameters& hyper);

/// Gradient of collapsed_elbo over the log hyperparameters.
Eigen::Vector3d collapsed_elbo_gradient(const DataBatch& data, const PointSet& inducing,
                                        const Hyperparameters& hyper);

/// Minibatch estimate of the uncollapsed bound, with the expected
/// log-likelihood rescaled by total_n / |batch|.
double svgp_elbo(const DataBatch& batch, const SparseGPState& state, std::size_t total_n);

/// svgp_elbo together with its gradient over (log hyper, q mean, chol(q cov)).
BoundEvaluation svgp_elbo_gradient(const DataBatch& batch, const SparseGPState& state,
                                   std::size_t total_n);

/// The q(u) maximizing the uncollapsed bound on `data` for fixed Z and theta.
VariationalState sgpr_optimal_variational(const DataBatch& data, const PointSet& inducing,
                                          const Hyperparameters& hyper);

struct SparseFitResult {
  SparseGPState state;
  int iterations = 0;
  bool warning = false;
  double initial_elbo = 0.0;
  double final_elbo = 0.0;
};

/// Collapsed SGPR fit: Z from pivoted Cholesky over the data inputs, theta by
/// gradient ascent on the collapsed bound, q(u) at its analytic optimum.
SparseFitResult fit_sgpr(const DataBatch& data, std::size_t m, const Hyperparameters& init,
                         const OptimizerConfig& opt = {});

struct SvgpTrainConfig {
  std::size_t minibatch = 64;
  int steps = 50;
  double learning_rate = 1e-2;
};

/// Minibatch stochastic ascent (Adam) on the uncollapsed bound over
/// hyperparameters, q mean and the Cholesky factor of q cov. Z stays fixed.
SparseGPState train_svgp(const DataBatch& data, const SparseGPState& start,
                         const SvgpTrainConfig& config, std::uint64_t seed);

std::vector<PosteriorPrediction> predict_sparse(const SparseGPState& state, const PointSet& query);

}  // namespace oipp
