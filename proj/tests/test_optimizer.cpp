#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oipp/optimizer.hpp"

using namespace oipp;

namespace {

// Concave quadratic with maximum at c.
struct Bowl {
  Eigen::VectorXd c;
  double value(const Eigen::VectorXd& x) const { return -0.5 * (x - c).squaredNorm(); }
  Objective both(const Eigen::VectorXd& x) const { return {value(x), c - x}; }
};

}  // namespace

TEST_CASE("maximize finds the top of a quadratic") {
  Bowl b{Eigen::Vector3d(1.0, -2.0, 0.5)};
  const auto r = maximize([&](const Eigen::VectorXd& x) { return b.both(x); },
                          [&](const Eigen::VectorXd& x) { return b.value(x); }, Eigen::Vector3d::Zero(), {});
  CHECK(r.converged);
  CHECK((r.x - b.c).norm() < 1e-4);
  CHECK(r.value >= r.initial_value);
}

TEST_CASE("maximize is monotone and respects the iteration cap") {
  Bowl b{Eigen::Vector2d(30.0, -40.0)};
  OptimizerConfig cfg;
  cfg.max_iterations = 3;
  cfg.initial_step = 1e-3;
  const auto r = maximize([&](const Eigen::VectorXd& x) { return b.both(x); },
                          [&](const Eigen::VectorXd& x) { return b.value(x); }, Eigen::Vector2d::Zero(), cfg);
  CHECK(r.iterations == 3);
  CHECK_FALSE(r.converged);
  CHECK(r.value > r.initial_value);
}

TEST_CASE("maximize stays inside box constraints") {
  Bowl b{Eigen::Vector2d(5.0, 0.3)};
  OptimizerConfig cfg;
  cfg.lower = Eigen::Vector2d(-1.0, -1.0);
  cfg.upper = Eigen::Vector2d(1.0, 1.0);
  const auto r = maximize([&](const Eigen::VectorXd& x) { return b.both(x); },
                          [&](const Eigen::VectorXd& x) { return b.value(x); }, Eigen::Vector2d::Zero(), cfg);
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("maximize treats throwing trials as rejections") {
  Bowl b{Eigen::VectorXd::Constant(1, 2.0)};
  auto value = [&](const Eigen::VectorXd& x) {
    if (x(0) > 1.0) throw std::runtime_error("wall");
    return b.value(x);
  };
  auto both = [&](const Eigen::VectorXd& x) {
    if (x(0) > 1.0) throw std::runtime_error("wall");
    return b.both(x);
  };
  const auto r = maximize(both, value, Eigen::VectorXd::Zero(1), {});
  CHECK(r.x(0) <= 1.0);
  CHECK(r.x(0) > 0.9);
}

TEST_CASE("maximize flags a non-finite gradient") {
  const auto r = maximize(
      [](const Eigen::VectorXd&) { return Objective{0.0, Eigen::VectorXd::Constant(1, NAN)}; },
      [](const Eigen::VectorXd&) { return 0.0; }, Eigen::VectorXd::Zero(1), {});
  CHECK(r.warning);
  CHECK(r.iterations == 0);
}

TEST_CASE("maximize limits the change per iteration") {
  Bowl b{Eigen::Vector2d(100.0, 0.0)};
  OptimizerConfig cfg;
  cfg.max_move = 0.5;
  cfg.max_iterations = 4;
  cfg.initial_step = 10.0;
  const auto r = maximize([&](const Eigen::VectorXd& x) { return b.both(x); },
                          [&](const Eigen::VectorXd& x) { return b.value(x); }, Eigen::Vector2d::Zero(), cfg);
  CHECK(r.iterations == 4);
  CHECK(r.x(0) <= 2.0 + 1e-12);
  CHECK(r.x(0) > 1.9);
}

TEST_CASE("Barzilai-Borwein steps handle an ill-scaled quadratic") {
  auto value = [](const Eigen::VectorXd& x) { return -0.5 * (x(0) * x(0) + 400.0 * x(1) * x(1)); };
  auto both = [&](const Eigen::VectorXd& x) {
    return Objective{value(x), Eigen::Vector2d(-x(0), -400.0 * x(1))};
  };
  OptimizerConfig plain;
  plain.max_iterations = 30;
  OptimizerConfig bb = plain;
  bb.barzilai_borwein = true;
  const Eigen::Vector2d start(5.0, 1.0);
  const auto a = maximize(both, value, start, plain);
  const auto c = maximize(both, value, start, bb);
  CHECK(c.value >= a.value);
  CHECK(c.x.norm() < 1e-3);
}
