#include "oipp/kernel.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

namespace oipp {

PointSet make_points(std::initializer_list<Point> points) {
  PointSet out(static_cast<Eigen::Index>(points.size()), 2);
  Eigen::Index i = 0;
  for (const auto& p : points) out.row(i++) = p.transpose();
  return out;
}

DataBatch concat(const DataBatch& a, const DataBatch& b) {
  DataBatch out;
  out.inputs.resize(a.inputs.rows() + b.inputs.rows(), 2);
  out.inputs << a.inputs, b.inputs;
  out.targets.resize(a.targets.size() + b.targets.size());
  out.targets << a.targets, b.targets;
  return out;
}

Hyperparameters Hyperparameters::from_natural(double lengthscale, double signal_variance,
                                              double noise_variance) {
  for (double v : {lengthscale, signal_variance, noise_variance}) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InputError("hyperparameters must be finite and strictly positive");
    }
  }
  return Hyperparameters(
      Eigen::Vector3d(std::log(lengthscale), std::log(signal_variance), std::log(noise_variance)));
}

Hyperparameters Hyperparameters::from_log(const Eigen::Vector3d& log_params) {
  if (!log_params.allFinite()) throw InputError("log hyperparameters must be finite");
  return Hyperparameters(log_params);
}

Hyperparameters default_hyperparameters(double domain_diagonal, const Eigen::VectorXd& targets) {
  double signal = 1.0;
  if (targets.size() >= 2) {
    const double mean = targets.mean();
    signal = (targets.array() - mean).square().sum() / static_cast<double>(targets.size());
    if (!(signal > 1e-12)) signal = 1.0;
  }
  return Hyperparameters::from_natural(0.1 * domain_diagonal, signal, 0.01 * signal);
}

LogBox hyperparameter_box(double domain_diagonal, double signal) {
  if (!(domain_diagonal > 0.0) || !(signal > 0.0)) throw InputError("hyperparameter_box: scales must be positive");
  LogBox box;
  box.lower << std::log(0.005 * domain_diagonal), std::log(1e-4 * signal), std::log(1e-6 * signal);
  box.upper << std::log(0.5 * domain_diagonal), std::log(1e4 * signal), std::log(10.0 * signal);
  return box;
}

namespace {

void require_finite(const PointSet& pts) {
  if (!pts.allFinite()) throw InputError("point coordinates must be finite");
}

}  // namespace

Eigen::MatrixXd squared_distances(const PointSet& a, const PointSet& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    const double bx = b(j, 0);
    const double by = b(j, 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double dx = a(i, 0) - bx;
      const double dy = a(i, 1) - by;
      d(i, j) = dx * dx + dy * dy;
    }
  }
  return d;
}

Eigen::MatrixXd rbf_from_distances(const Eigen::MatrixXd& sq_dist, const Hyperparameters& hyper) {
  const double l = hyper.lengthscale();
  return hyper.signal_variance() * (sq_dist.array() * (-0.5 / (l * l))).exp().matrix();
}

Eigen::MatrixXd rbf_kernel(const PointSet& a, const PointSet& b, const Hyperparameters& hyper) {
  require_finite(a);
  require_finite(b);
  return rbf_from_distances(squared_distances(a, b), hyper);
}

Eigen::MatrixXd CholeskyFactor::solve_lower(const Eigen::MatrixXd& rhs) const {
  return lower.triangularView<Eigen::Lower>().solve(rhs);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& rhs) const {
  const Eigen::MatrixXd half = lower.triangularView<Eigen::Lower>().solve(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(half);
}

double CholeskyFactor::log_determinant() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

CholeskyFactor cholesky_psd(const Eigen::MatrixXd& m, const JitterPolicy& policy) {
  if (m.rows() != m.cols()) throw InputError("cholesky_psd: matrix must be square");
  CholeskyFactor out;
  const Eigen::Index n = m.rows();
  if (n == 0) return out;
  if (!m.allFinite()) throw NumericalError("cholesky_psd: matrix has non-finite entries");
  const double mean_diag = std::max(std::abs(m.diagonal().mean()), 1e-300);

  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  while (true) {
    out.attempted.push_back(jitter);
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      // LLT does not always flag tiny negative pivots; reject non-finite factors.
      const auto& l = llt.matrixLLT();
      ok = l.diagonal().allFinite() && (l.diagonal().array() > 0.0).all();
    }
    if (ok) {
      out.lower = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
    const double next = jitter == 0.0 ? policy.initial_relative * mean_diag : jitter * policy.growth;
    if (next > policy.max_relative * mean_diag * (1.0 + 1e-12)) break;
    jitter = next;
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed at maximum jitter; attempted:";
  for (double j : out.attempted) msg << ' ' << j;
  throw NumericalError(msg.str());
}

std::vector<std::size_t> pivoted_cholesky_select(const PointSet& candidates, std::size_t k,
                                                 const Hyperparameters& hyper) {
  const auto n = static_cast<std::size_t>(candidates.rows());
  if (k < 1 || k > n) throw InputError("pivoted_cholesky_select: need 1 <= k <= |candidates|");
  require_finite(candidates);

  const double sf2 = hyper.signal_variance();
  const double inv_two_l2 = 0.5 / (hyper.lengthscale() * hyper.lengthscale());
  Eigen::VectorXd residual = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), sf2);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> factor(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> pivots;
  pivots.reserve(k);

  for (std::size_t j = 0; j < k; ++j) {
    std::size_t best = n;
    double best_val = -std::numeric_limits<double>::infinity();
    const double tie = 1e-12 * sf2;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && residual(static_cast<Eigen::Index>(i)) > best_val + tie) {
        best_val = residual(static_cast<Eigen::Index>(i));
        best = i;
      }
    }
    taken[best] = true;
    pivots.push_back(best);

    const auto p = static_cast<Eigen::Index>(best);
    const auto col = static_cast<Eigen::Index>(j);
    if (best_val <= 0.0) {
      // Candidate pool exhausted numerically; remaining pivots carry no new direction.
      factor.col(col).setZero();
      continue;
    }
    const double pivot_sd = std::sqrt(best_val);
    const double px = candidates(p, 0);
    const double py = candidates(p, 1);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      const double dx = candidates(i, 0) - px;
      const double dy = candidates(i, 1) - py;
      double v = sf2 * std::exp(-(dx * dx + dy * dy) * inv_two_l2);
      if (col > 0) v -= factor.row(i).head(col).dot(factor.row(p).head(col));
      factor(i, col) = v / pivot_sd;
    }
    residual.array() -= factor.col(col).array().square();
  }
  return pivots;
}

}  // namespace oipp
