#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oipp/gp_exact.hpp"
#include "oracles.hpp"

using namespace oipp;

namespace {

DataBatch single(double x, double y, double target) {
  DataBatch d;
  d.inputs = make_points({{x, y}});
  d.targets = Eigen::VectorXd::Constant(1, target);
  return d;
}

}  // namespace

TEST_CASE("log_marginal_likelihood scalar cases") {
  // K_y = [1]: signal 0.5 + noise 0.5
  const auto h = Hyperparameters::from_natural(1.0, 0.5, 0.5);
  CHECK(log_marginal_likelihood(ExactGPState(single(0, 0, 0.0), h)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
  CHECK(log_marginal_likelihood(ExactGPState(single(0, 0, 1.0), h)) ==
        doctest::Approx(-0.5 - 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
  CHECK(log_marginal_likelihood(ExactGPState(single(0, 0, 0.0), h)) == doctest::Approx(-0.918939).epsilon(1e-6));
}

TEST_CASE("log_marginal_likelihood and prediction match the dense-inverse oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = oracle::random_data(rng, 5);
    const auto h = oracle::random_hyper(rng);
    const ExactGPState s(d, h);
    CHECK(std::abs(log_marginal_likelihood(s) - oracle::lml(d, h)) < 1e-9);
    const auto q = oracle::random_points(rng, 7, 0.0, 10.0);
    const auto ref = oracle::exact_predict(d, h, q);
    const auto got = predict_exact(s, q);
    for (int i = 0; i < 7; ++i) {
      CHECK(std::abs(got[i].mean - ref.mean(i)) < 1e-9);
      CHECK(std::abs(got[i].variance - ref.var(i)) < 1e-9);
    }
  }
}

TEST_CASE("lml_gradient matches central finite differences") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = oracle::random_data(rng, 6);
    const auto h = oracle::random_hyper(rng);
    const Eigen::Vector3d g = lml_gradient(ExactGPState(d, h));
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& p) { return oracle::lml(d, Hyperparameters::from_log(p)); },
        h.log_params());
    CHECK(oracle::max_relative_error(g, fd) < 1e-4);
  }
}

TEST_CASE("lml_gradient with zero targets equals the log-determinant gradient") {
  std::mt19937_64 rng(3);
  auto d = oracle::random_data(rng, 6);
  d.targets.setZero();
  const auto h = oracle::random_hyper(rng);
  const Eigen::Vector3d g = lml_gradient(ExactGPState(d, h));
  const Eigen::VectorXd fd = oracle::central_difference(
      [&](const Eigen::VectorXd& p) {
        const auto hh = Hyperparameters::from_log(p);
        Eigen::MatrixXd ky = oracle::kernel(d.inputs, d.inputs, hh);
        ky.diagonal().array() += hh.noise_variance();
        return -0.5 * std::log(ky.determinant());
      },
      h.log_params());
  CHECK(oracle::max_relative_error(g, fd) < 1e-4);
}

TEST_CASE("lengthscale gradient vanishes under overwhelming noise") {
  std::mt19937_64 rng(4);
  const auto d = oracle::random_data(rng, 6);
  const auto h = Hyperparameters::from_natural(2.0, 1.0, 1e6);
  CHECK(std::abs(lml_gradient(ExactGPState(d, h))(0)) < 1e-5);
}

TEST_CASE("predict_exact edge cases") {
  const auto h = Hyperparameters::from_natural(2.0, 1.7, 0.1);
  SUBCASE("empty training set returns the prior") {
    const ExactGPState s(DataBatch{}, h);
    for (const auto& p : predict_exact(s, make_points({{0, 0}, {5, 5}}))) {
      CHECK(p.mean == 0.0);
      CHECK(p.variance == doctest::Approx(1.7));
    }
  }
  SUBCASE("near-noiseless interpolation") {
    std::mt19937_64 rng(5);
    const auto d = oracle::random_data(rng, 5);
    const ExactGPState s(d, Hyperparameters::from_natural(2.0, 1.0, 1e-12));
    const auto p = predict_exact(s, d.inputs);
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(p[i].mean - d.targets(i)) < 1e-5);
      CHECK(p[i].variance <= 1e-6);
    }
  }
}

TEST_CASE("posterior variance properties") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 15; ++trial) {
    const auto d = oracle::random_data(rng, 8);
    const auto h = oracle::random_hyper(rng);
    const auto q = oracle::random_points(rng, 10, -2.0, 12.0);
    const auto full = predict_exact(ExactGPState(d, h), q);
    DataBatch fewer{d.inputs.topRows(7), d.targets.head(7)};
    const auto less = predict_exact(ExactGPState(fewer, h), q);
    for (int i = 0; i < 10; ++i) {
      CHECK(full[i].variance <= h.signal_variance() + 1e-9);
      CHECK(full[i].variance >= 0.0);
      CHECK(full[i].variance <= less[i].variance + 1e-9);
    }
  }
}

TEST_CASE("fit_exact") {
  SUBCASE("increases the LML") {
    std::mt19937_64 rng(7);
    const auto d = oracle::random_data(rng, 30);
    const auto init = Hyperparameters::from_natural(1.0, 1.0, 0.1);
    const auto r = fit_exact(d, init);
    CHECK(r.final_lml >= r.initial_lml);
    CHECK(r.final_lml == doctest::Approx(log_marginal_likelihood(r.state)));
  }
  SUBCASE("returns immediately at a stationary point") {
    std::mt19937_64 rng(8);
    const auto d = oracle::random_data(rng, 20);
    const auto first = fit_exact(d, Hyperparameters::from_natural(2.0, 1.0, 0.1));
    OptimizerConfig loose;
    loose.gradient_tolerance = std::max(1e-5, 2.0 * lml_gradient(first.state).norm());
    const auto again = fit_exact(d, first.state.hyper(), loose);
    CHECK(again.iterations == 0);
    CHECK(again.state.hyper() == first.state.hyper());
  }
  SUBCASE("duplicate inputs with conflicting targets") {
    DataBatch d;
    d.inputs = make_points({{1, 1}, {1, 1}});
    d.targets = Eigen::Vector2d(1.0, -1.0);
    const auto r = fit_exact(d, Hyperparameters::from_natural(1.0, 1.0, 0.01));
    CHECK(std::isfinite(r.final_lml));
    // the gap of 2 must be explained by noise: sample variance of the pair is 1
    CHECK(r.state.hyper().noise_variance() >= 0.5);
  }
  SUBCASE("fewer than two points") {
    CHECK_THROWS_AS(fit_exact(single(0, 0, 1), Hyperparameters::from_natural(1, 1, 1)), InputError);
  }
}

TEST_CASE("fit_exact recovers the generating lengthscale") {
  // 10x10 grid at 5 m spacing, samples from a GP with lengthscale 10.
  PointSet grid(100, 2);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) grid.row(i * 10 + j) << 5.0 * i, 5.0 * j;
  const auto truth = Hyperparameters::from_natural(10.0, 1.0, 1e-3);
  Eigen::MatrixXd k = oracle::kernel(grid, grid, truth);
  k.diagonal().array() += 1e-3;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
  int hits = 0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd e(100);
    for (int i = 0; i < 100; ++i) e(i) = z(rng);
    DataBatch d{grid, l * e};
    const auto r = fit_exact(d, default_hyperparameters(std::sqrt(2.0) * 45.0, d.targets));
    const double ls = r.state.hyper().lengthscale();
    if (ls > 5.0 && ls < 20.0) ++hits;
  }
  CHECK(hits >= 8);
}
