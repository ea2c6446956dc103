#pragma once

// Brute-force reference implementations used only by tests. They evaluate
// textbook formulas with explicit dense inverses and determinants (LU based),
// independent of the Cholesky-based library code paths.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "oipp/kernel.hpp"
#include "oipp/types.hpp"

namespace oracle {

inline double rbf(const oipp::Point& a, const oipp::Point& b, double l, double sf2) {
  return sf2 * std::exp(-(a - b).squaredNorm() / (2.0 * l * l));
}

inline Eigen::MatrixXd kernel(const oipp::PointSet& a, const oipp::PointSet& b, double l, double sf2) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = rbf(a.row(i).transpose(), b.row(j).transpose(), l, sf2);
  return k;
}

inline Eigen::MatrixXd kernel(const oipp::PointSet& a, const oipp::PointSet& b,
                              const oipp::Hyperparameters& h) {
  return kernel(a, b, h.lengthscale(), h.signal_variance());
}

inline double lml(const oipp::DataBatch& d, const oipp::Hyperparameters& h) {
  Eigen::MatrixXd ky = kernel(d.inputs, d.inputs, h);
  ky.diagonal().array() += h.noise_variance();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ky);
  const Eigen::MatrixXd inv = lu.inverse();
  const double n = static_cast<double>(d.size());
  return -0.5 * d.targets.dot(inv * d.targets) - 0.5 * std::log(lu.determinant()) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct MeanVar {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

inline MeanVar exact_predict(const oipp::DataBatch& d, const oipp::Hyperparameters& h,
                             const oipp::PointSet& q) {
  Eigen::MatrixXd ky = kernel(d.inputs, d.inputs, h);
  ky.diagonal().array() += h.noise_variance();
  const Eigen::MatrixXd inv = Eigen::FullPivLU<Eigen::MatrixXd>(ky).inverse();
  const Eigen::MatrixXd kqf = kernel(q, d.inputs, h);
  MeanVar out;
  out.mean = kqf * inv * d.targets;
  out.var = (kernel(q, q, h) - kqf * inv * kqf.transpose()).diagonal();
  return out;
}

/// log N(y | 0, Q + noise I) - tr(K - Q)/(2 noise) with dense inverses.
inline double collapsed(const oipp::DataBatch& d, const oipp::PointSet& z, const oipp::Hyperparameters& h) {
  const Eigen::MatrixXd kuu = kernel(z, z, h);
  const Eigen::MatrixXd kuf = kernel(z, d.inputs, h);
  const Eigen::MatrixXd qff = kuf.transpose() * Eigen::FullPivLU<Eigen::MatrixXd>(kuu).inverse() * kuf;
  Eigen::MatrixXd qyy = qff;
  qyy.diagonal().array() += h.noise_variance();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(qyy);
  const double n = static_cast<double>(d.size());
  const double trace = (kernel(d.inputs, d.inputs, h) - qff).trace();
  return -0.5 * d.targets.dot(lu.inverse() * d.targets) - 0.5 * std::log(lu.determinant()) -
         0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * trace / h.noise_variance();
}

inline double gaussian_kl(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0,
                          const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu1(s1);
  const Eigen::MatrixXd inv1 = lu1.inverse();
  const Eigen::VectorXd d = m1 - m0;
  return 0.5 * ((inv1 * s0).trace() + d.dot(inv1 * d) - static_cast<double>(m0.size()) +
                std::log(lu1.determinant()) - std::log(Eigen::FullPivLU<Eigen::MatrixXd>(s0).determinant()));
}

/// Central finite differences of f at x.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|b_i|, floor)
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(std::abs(b(i)), floor));
  }
  return worst;
}

inline oipp::PointSet random_points(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  oipp::PointSet p(n, 2);
  for (int i = 0; i < n; ++i) p.row(i) << u(rng), u(rng);
  return p;
}

/// Smooth test function with roughly unit variance over [0, 10]^2.
inline double smooth_field(double x, double y) {
  return std::sin(0.6 * x) * std::cos(0.4 * y) + 0.5 * std::sin(0.3 * (x + y));
}

inline oipp::DataBatch random_data(std::mt19937_64& rng, int n, double lo = 0.0, double hi = 10.0,
                                   double noise_sd = 0.05) {
  oipp::DataBatch d;
  d.inputs = random_points(rng, n, lo, hi);
  d.targets.resize(n);
  std::normal_distribution<double> noise(0.0, noise_sd);
  for (int i = 0; i < n; ++i) d.targets(i) = smooth_field(d.inputs(i, 0), d.inputs(i, 1)) + noise(rng);
  return d;
}

inline oipp::Hyperparameters random_hyper(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return oipp::Hyperparameters::from_natural(1.0 + 3.0 * u(rng), 0.5 + 1.5 * u(rng), 0.01 + 0.2 * u(rng));
}

}  // namespace oracle
