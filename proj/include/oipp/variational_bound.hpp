#pragma once

#include <optional>

#include <Eigen/Core>

#include "oipp/kernel.hpp"
#include "oipp/types.hpp"

namespace oipp {

/// Gaussian factor t(v) = exp(-1/2 v^T precision v + v^T shift) on the
/// whitened outputs v = L^{-1} u, K_uu = L L^T, so that q(u) is proportional
/// to p(u) t(L^{-1} u). precision is positive semi-definite and shift lies in
/// its range.
struct WhitenedSite {
  Eigen::MatrixXd precision;
  Eigen::VectorXd shift;
};

/// Gaussian q(u) = N(mean, cov) over the inducing outputs. States built by
/// optimal_variational also carry the site they were computed from.
struct VariationalState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::optional<WhitenedSite> site;
};

/// A previous sparse posterior q'(a) at old inducing inputs, together with the
/// quantities of the old prior p(a | theta_old) that the online bound needs.
/// Everything here is constant while the new posterior is being optimized.
///
/// The old prior factor L' (K'_aa = L' L'^T) whitens the old inducing
/// outputs; in those coordinates S'^{-1} - K'^{-1}_aa is the site precision.
struct OldPosteriorTerms {
  PointSet inducing;
  VariationalState posterior;
  Hyperparameters hyper;
  Eigen::MatrixXd prior_chol;        // L', lower factor of K'_aa (with jitter)
  Eigen::MatrixXd precision_gap;     // L'^T (S'^{-1} - K'^{-1}_aa) L'
  Eigen::MatrixXd precision_factor;  // B with B B^T = precision_gap
  Eigen::VectorXd shift;             // L'^T S'^{-1} m'
  double constant = 0.0;             // -1/2 log|S'| + 1/2 log|K'_aa| - 1/2 m'^T S'^{-1} m'
};

/// The site of q'(a) is taken from `posterior` when present and otherwise
/// recovered from its mean and covariance.

OldPosteriorTerms prepare_old_terms(const PointSet& inducing, const VariationalState& posterior,
                                    const Hyperparameters& hyper);

/// Data and structure of one uncollapsed variational bound evaluation:
///
///   scale * sum_i E_q[log N(y_i | f_i, noise)] - KL[q(u) || p(u)]
///     + KL[q(a) || p_old(a)] - KL[q(a) || q'(a)]
///
/// The last two terms are present only when `old` is set; q(a) is q(u)
/// pushed through the GP conditional to the old inducing inputs.
struct BoundProblem {
  const DataBatch* batch = nullptr;
  const PointSet* inducing = nullptr;
  double likelihood_scale = 1.0;
  const OldPosteriorTerms* old = nullptr;
};

struct BoundTerms {
  double expected_log_likelihood = 0.0;  // already multiplied by likelihood_scale
  double kl_prior = 0.0;                 // KL[q(u) || p(u)]
  double old_correction = 0.0;           // KL[q(a)||p_old(a)] - KL[q(a)||q'(a)]
  [[nodiscard]] double total() const { return expected_log_likelihood - kl_prior + old_correction; }
};

struct BoundEvaluation {
  BoundTerms terms;
  double value = 0.0;
  Eigen::Vector3d grad_hyper = Eigen::Vector3d::Zero();  // w.r.t. log hyperparameters
  Eigen::VectorXd grad_mean;
  Eigen::MatrixXd grad_chol;  // w.r.t. the lower factor L of cov = L L^T
};

/// Evaluates the bound at q(u) = N(mean, chol chol^T). With `with_gradient`
/// the analytic gradient is filled in; the jitter added to K_uu is treated as
/// a constant.
BoundEvaluation evaluate_bound(const BoundProblem& problem, const Hyperparameters& hyper,
                               const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol,
                               bool with_gradient);

/// The q(u) that maximizes the bound for fixed hyperparameters:
/// cov = K M^{-1} K, mean = K M^{-1} (scale/noise K_uf y + K_ua S'^{-1} m'),
/// with M = K + scale/noise K_uf K_fu + K_ua (S'^{-1} - K'^{-1}_aa) K_au.
/// It is assembled from its whitened site, which is returned alongside.
VariationalState optimal_variational(const BoundProblem& problem, const Hyperparameters& hyper);

/// The bound with q(u) profiled out, and its gradient over the log
/// hyperparameters (the partial gradient at the optimal q, by stationarity).
struct ProfiledBound {
  VariationalState q;
  double value = 0.0;
  Eigen::Vector3d grad_hyper = Eigen::Vector3d::Zero();
};
ProfiledBound profiled_bound(const BoundProblem& problem, const Hyperparameters& hyper,
                             bool with_gradient);

/// Lower Cholesky factor of a variational covariance, with jitter if needed.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov);

/// Closed-form KL[N(m0, S0) || N(m1, S1)].
double gaussian_kl(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0, const Eigen::VectorXd& m1,
                   const Eigen::MatrixXd& s1);

}  // namespace oipp
