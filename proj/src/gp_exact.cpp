#include "oipp/gp_exact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace oipp {

ExactGPState::ExactGPState(DataBatch data, const Hyperparameters& hyper)
    : data_(std::move(data)), hyper_(hyper) {
  if (data_.inputs.rows() != data_.targets.size()) {
    throw InputError("ExactGPState: inputs and targets differ in length");
  }
  if (data_.empty()) return;
  Eigen::MatrixXd ky = rbf_kernel(data_.inputs, data_.inputs, hyper_);
  ky.diagonal().array() += hyper_.noise_variance();
  factor_ = cholesky_psd(ky);
  alpha_ = factor_.solve(data_.targets);
}

std::vector<PosteriorPrediction> ExactGPState::predict(const PointSet& query) const {
  const double sf2 = hyper_.signal_variance();
  std::vector<PosteriorPrediction> out(static_cast<std::size_t>(query.rows()),
                                       PosteriorPrediction{0.0, sf2});
  if (data_.empty() || query.rows() == 0) return out;
  const Eigen::MatrixXd k_fq = rbf_kernel(data_.inputs, query, hyper_);
  const Eigen::VectorXd mean = k_fq.transpose() * alpha_;
  const Eigen::MatrixXd v = factor_.solve_lower(k_fq);
  const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = {mean(i), std::max(0.0, sf2 - reduction(i))};
  }
  return out;
}

double log_marginal_likelihood(const ExactGPState& state) {
  const auto& y = state.data().targets;
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(state.weights()) - 0.5 * state.factor().log_determinant() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::Vector3d lml_gradient(const ExactGPState& state) {
  const auto& x = state.data().inputs;
  const auto& hyper = state.hyper();
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd sq = squared_distances(x, x);
  const Eigen::MatrixXd kf = rbf_from_distances(sq, hyper);

  const Eigen::MatrixXd linv =
      state.factor().lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd w = -(linv.transpose() * linv);
  w.noalias() += state.weights() * state.weights().transpose();

  const double l2 = hyper.lengthscale() * hyper.lengthscale();
  const Eigen::ArrayXXd wk = w.array() * kf.array();
  Eigen::Vector3d g;
  g(0) = 0.5 * (wk * sq.array()).sum() / l2;
  g(1) = 0.5 * wk.sum();
  g(2) = 0.5 * hyper.noise_variance() * w.trace();
  return g;
}

ExactFitResult fit_exact(const DataBatch& data, const Hyperparameters& init,
                         const OptimizerConfig& opt) {
  if (data.size() < 2) throw InputError("fit_exact: need at least two data points");

  auto value_and_gradient = [&](const Eigen::VectorXd& p) {
    const ExactGPState s(data, Hyperparameters::from_log(p));
    return Objective{log_marginal_likelihood(s), lml_gradient(s)};
  };
  auto value = [&](const Eigen::VectorXd& p) {
    return log_marginal_likelihood(ExactGPState(data, Hyperparameters::from_log(p)));
  };

  OptimizerResult r;
  bool failed = false;
  try {
    r = maximize(value_and_gradient, value, init.log_params(), opt);
  } catch (const std::exception&) {
    failed = true;
  }
  if (failed) {
    ExactGPState s(data, init);
    const double lml = log_marginal_likelihood(s);
    return ExactFitResult{std::move(s), 0, true, lml, lml};
  }
  ExactGPState s(data, Hyperparameters::from_log(r.x));
  return ExactFitResult{std::move(s), r.iterations, r.warning, r.initial_value, r.value};
}

std::vector<PosteriorPrediction> predict_exact(const ExactGPState& state, const PointSet& query) {
  return state.predict(query);
}

}  // namespace oipp
