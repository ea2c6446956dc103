#pragma once

#include <vector>

#include <Eigen/Core>

#include "oipp/kernel.hpp"
#include "oipp/optimizer.hpp"
#include "oipp/posterior.hpp"
#include "oipp/types.hpp"

namespace oipp {

/// Exact GP conditioned on a full training set. Immutable once built; the
/// Cholesky factor of K(X,X) + noise*I is computed at construction.
class ExactGPState final : public Posterior {
 public:
  ExactGPState(DataBatch data, const Hyperparameters& hyper);

  [[nodiscard]] const DataBatch& data() const { return data_; }
  [[nodiscard]] const Hyperparameters& hyper() const override { return hyper_; }
  [[nodiscard]] const CholeskyFactor& factor() const { return factor_; }
  /// K_y^{-1} y.
  [[nodiscard]] const Eigen::VectorXd& weights() const { return alpha_; }

  [[nodiscard]] std::vector<PosteriorPrediction> predict(const PointSet& query) const override;

 private:
  DataBatch data_;
  Hyperparameters hyper_;
  CholeskyFactor factor_;
  Eigen::VectorXd alpha_;
};

double log_marginal_likelihood(const ExactGPState& state);

/// Gradient of the log marginal likelihood with respect to
/// (log lengthscale, log signal variance, log noise variance).
Eigen::Vector3d lml_gradient(const ExactGPState& state);

struct ExactFitResult {
  ExactGPState state;
  int iterations = 0;
  bool warning = false;
  double initial_lml = 0.0;
  double final_lml = 0.0;
};

/// Maximizes the log marginal likelihood over the log-hyperparameters,
/// starting from `init`. Never throws for optimizer trouble; the best
/// iterate is returned with `warning` set instead.
ExactFitResult fit_exact(const DataBatch& data, const Hyperparameters& init,
                         const OptimizerConfig& opt = {});

std::vector<PosteriorPrediction> predict_exact(const ExactGPState& state, const PointSet& query);

}  // namespace oipp
