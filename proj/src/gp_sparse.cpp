#include "oipp/gp_sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <utility>

namespace oipp {

SparseGPState::SparseGPState(PointSet inducing, VariationalState q, const Hyperparameters& hyper)
    : inducing_(std::move(inducing)), q_(std::move(q)), hyper_(hyper) {
  const Eigen::Index m = inducing_.rows();
  if (m < 1) throw InputError("SparseGPState: need at least one inducing input");
  if (q_.mean.size() != m || q_.cov.rows() != m || q_.cov.cols() != m) {
    throw InputError("SparseGPState: variational dimensions do not match the inducing set");
  }
  const double scale = std::max(1.0, q_.cov.cwiseAbs().maxCoeff());
  if ((q_.cov - q_.cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw InputError("SparseGPState: variational covariance is not symmetric");
  }
  q_.cov = 0.5 * (q_.cov + q_.cov.transpose());

  k_uu_ = cholesky_psd(rbf_kernel(inducing_, inducing_, hyper_));
  alpha_ = k_uu_.solve(q_.mean);
  const Eigen::MatrixXd k_inv = k_uu_.solve(Eigen::MatrixXd::Identity(m, m));
  variance_reduce_ = k_inv - k_inv * q_.cov * k_inv;
}

SparseGPState SparseGPState::prior(PointSet inducing, const Hyperparameters& hyper) {
  const auto l = cholesky_psd(rbf_kernel(inducing, inducing, hyper));
  VariationalState q{Eigen::VectorXd::Zero(inducing.rows()), l.lower * l.lower.transpose(), std::nullopt};
  return SparseGPState(std::move(inducing), std::move(q), hyper);
}

std::vector<PosteriorPrediction> SparseGPState::predict(const PointSet& query) const {
  std::vector<PosteriorPrediction> out(static_cast<std::size_t>(query.rows()));
  if (query.rows() == 0) return out;
  const Eigen::MatrixXd k_qu = rbf_kernel(query, inducing_, hyper_);
  const Eigen::VectorXd mean = k_qu * alpha_;
  const Eigen::VectorXd reduce = ((k_qu * variance_reduce_).array() * k_qu.array()).rowwise().sum();
  const double sf2 = hyper_.signal_variance();
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = {mean(i), std::max(0.0, sf2 - reduce(i))};
  }
  return out;
}

VariationalState SparseGPState::joint(const PointSet& query) const {
  const Eigen::MatrixXd k_qu = rbf_kernel(query, inducing_, hyper_);
  VariationalState out;
  out.mean = k_qu * alpha_;
  out.cov = rbf_kernel(query, query, hyper_) - k_qu * variance_reduce_ * k_qu.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

std::vector<PosteriorPrediction> predict_sparse(const SparseGPState& state, const PointSet& query) {
  return state.predict(query);
}

double collapsed_elbo(const DataBatch& data, const PointSet& inducing, const Hyperparameters& hyper) {
  if (data.empty()) throw InputError("collapsed_elbo: empty data");
  if (inducing.rows() < 1) throw InputError("collapsed_elbo: need at least one inducing input");
  const double n = static_cast<double>(data.size());
  const double noise = hyper.noise_variance();
  const double sigma = std::sqrt(noise);
  const Eigen::Index m = inducing.rows();

  const auto lb = cholesky_psd(rbf_kernel(inducing, inducing, hyper));
  const Eigen::MatrixXd a = lb.solve_lower(rbf_kernel(inducing, data.inputs, hyper)) / sigma;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
  b.noalias() += a * a.transpose();
  const auto lbb = cholesky_psd(b);
  const Eigen::VectorXd c = lbb.solve_lower(a * data.targets) / sigma;

  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * lbb.log_determinant() -
         0.5 * n * std::log(noise) - 0.5 * data.targets.squaredNorm() / noise + 0.5 * c.squaredNorm() -
         0.5 * n * hyper.signal_variance() / noise + 0.5 * a.squaredNorm();
}

Eigen::Vector3d collapsed_elbo_gradient(const DataBatch& data, const PointSet& inducing,
                                        const Hyperparameters& hyper) {
  const BoundProblem problem{&data, &inducing, 1.0, nullptr};
  return profiled_bound(problem, hyper, true).grad_hyper;
}

VariationalState sgpr_optimal_variational(const DataBatch& data, const PointSet& inducing,
                                          const Hyperparameters& hyper) {
  const BoundProblem problem{&data, &inducing, 1.0, nullptr};
  return optimal_variational(problem, hyper);
}

namespace {

BoundProblem minibatch_problem(const DataBatch& batch, const SparseGPState& state,
                               std::size_t total_n) {
  if (batch.empty()) throw InputError("svgp_elbo: empty batch");
  if (total_n < batch.size()) throw InputError("svgp_elbo: total_n smaller than the batch");
  return BoundProblem{&batch, &state.inducing(),
                      static_cast<double>(total_n) / static_cast<double>(batch.size()), nullptr};
}

}  // namespace

double svgp_elbo(const DataBatch& batch, const SparseGPState& state, std::size_t total_n) {
  const auto problem = minibatch_problem(batch, state, total_n);
  return evaluate_bound(problem, state.hyper(), state.variational().mean,
                        covariance_factor(state.variational().cov), false)
      .value;
}

BoundEvaluation svgp_elbo_gradient(const DataBatch& batch, const SparseGPState& state,
                                   std::size_t total_n) {
  const auto problem = minibatch_problem(batch, state, total_n);
  return evaluate_bound(problem, state.hyper(), state.variational().mean,
                        covariance_factor(state.variational().cov), true);
}

SparseFitResult fit_sgpr(const DataBatch& data, std::size_t m, const Hyperparameters& init,
                         const OptimizerConfig& opt) {
  if (m < 1 || m > data.size()) throw InputError("fit_sgpr: need 1 <= m <= |data|");
  const PointSet z = gather_rows(data.inputs, pivoted_cholesky_select(data.inputs, m, init));

  auto value_and_gradient = [&](const Eigen::VectorXd& p) {
    const auto h = Hyperparameters::from_log(p);
    return Objective{collapsed_elbo(data, z, h), collapsed_elbo_gradient(data, z, h)};
  };
  auto value = [&](const Eigen::VectorXd& p) {
    return collapsed_elbo(data, z, Hyperparameters::from_log(p));
  };

  Hyperparameters hyper = init;
  int iterations = 0;
  bool warning = false;
  double initial = 0.0;
  double final_value = 0.0;
  try {
    const auto r = maximize(value_and_gradient, value, init.log_params(), opt);
    hyper = Hyperparameters::from_log(r.x);
    iterations = r.iterations;
    warning = r.warning;
    initial = r.initial_value;
    final_value = r.value;
  } catch (const std::exception&) {
    warning = true;
    initial = final_value = value(init.log_params());
  }
  auto q = sgpr_optimal_variational(data, z, hyper);
  return SparseFitResult{SparseGPState(z, std::move(q), hyper), iterations, warning, initial,
                         final_value};
}

namespace {

// Parameter vector layout: [log hyper (3), mean (m), lower triangle of chol (column-wise)].
Eigen::VectorXd pack(const Eigen::Vector3d& log_h, const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol) {
  const Eigen::Index m = mean.size();
  Eigen::VectorXd p(3 + m + m * (m + 1) / 2);
  p.head<3>() = log_h;
  p.segment(3, m) = mean;
  Eigen::Index k = 3 + m;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = j; i < m; ++i) p(k++) = chol(i, j);
  return p;
}

void unpack(const Eigen::VectorXd& p, Eigen::Index m, Eigen::Vector3d& log_h, Eigen::VectorXd& mean,
            Eigen::MatrixXd& chol) {
  log_h = p.head<3>();
  mean = p.segment(3, m);
  chol = Eigen::MatrixXd::Zero(m, m);
  Eigen::Index k = 3 + m;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = j; i < m; ++i) chol(i, j) = p(k++);
}

}  // namespace

SparseGPState train_svgp(const DataBatch& data, const SparseGPState& start,
                         const SvgpTrainConfig& config, std::uint64_t seed) {
  if (data.empty()) return start;
  const Eigen::Index m = static_cast<Eigen::Index>(start.inducing_count());
  const std::size_t b = std::min(config.minibatch, data.size());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Eigen::VectorXd params = pack(start.hyper().log_params(), start.variational().mean,
                                covariance_factor(start.variational().cov));
  Eigen::VectorXd first = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd second = Eigen::VectorXd::Zero(params.size());
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  std::size_t cursor = 0;

  Eigen::Vector3d log_h;
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;
  for (int step = 1; step <= config.steps; ++step) {
    DataBatch mb;
    mb.inputs.resize(static_cast<Eigen::Index>(b), 2);
    mb.targets.resize(static_cast<Eigen::Index>(b));
    for (std::size_t i = 0; i < b; ++i) {
      if (cursor == order.size()) {
        cursor = 0;
        std::shuffle(order.begin(), order.end(), rng);
      }
      const auto src = static_cast<Eigen::Index>(order[cursor++]);
      mb.inputs.row(static_cast<Eigen::Index>(i)) = data.inputs.row(src);
      mb.targets(static_cast<Eigen::Index>(i)) = data.targets(src);
    }
    unpack(params, m, log_h, mean, chol);
    BoundEvaluation eval;
    try {
      const BoundProblem problem{&mb, &start.inducing(),
                                 static_cast<double>(data.size()) / static_cast<double>(b), nullptr};
      eval = evaluate_bound(problem, Hyperparameters::from_log(log_h), mean, chol, true);
    } catch (const std::exception&) {
      break;
    }
    const Eigen::VectorXd g = pack(eval.grad_hyper, eval.grad_mean, eval.grad_chol);
    first = beta1 * first + (1.0 - beta1) * g;
    second = beta2 * second + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, step);
    const double c2 = 1.0 - std::pow(beta2, step);
    params.array() += config.learning_rate * (first.array() / c1) /
                      ((second.array() / c2).sqrt() + 1e-8);
  }
  unpack(params, m, log_h, mean, chol);
  return SparseGPState(start.inducing(), VariationalState{mean, chol * chol.transpose(), std::nullopt},
                       Hyperparameters::from_log(log_h));
}

}  // namespace oipp
