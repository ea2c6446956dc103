#pragma once

#include <functional>
#include <limits>

#include <Eigen/Core>

namespace oipp {

struct OptimizerConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;
  /// Stop when an accepted step improves the objective by less than this
  /// fraction of its magnitude. Zero disables the test.
  double relative_tolerance = 0.0;
  double initial_step = 1e-2;
  double step_growth = 2.0;
  double step_shrink = 0.5;
  double max_step = 1e3;
  /// Start each line search from the Barzilai-Borwein step of the last two
  /// iterates instead of growing the previous step.
  bool barzilai_borwein = false;
  /// Largest change of any coordinate in one iteration.
  double max_move = std::numeric_limits<double>::infinity();
  int max_backtracks = 40;
  double armijo = 1e-4;
  /// Optional box constraints. Empty vectors leave the problem unbounded.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Set when the line search could not make progress before convergence.
  bool warning = false;
};

/// Gradient ascent with Armijo backtracking. The step length adapts across
/// iterations: it grows after an accepted step and shrinks on rejection.
///
/// With box constraints every trial point is projected onto the box and the
/// stopping test uses the projected gradient.
///
/// `value_and_gradient` is evaluated at accepted points, `value` at trial
/// points. Either may throw; a throwing trial counts as a rejected step.
OptimizerResult maximize(const std::function<Objective(const Eigen::VectorXd&)>& value_and_gradient,
                         const std::function<double(const Eigen::VectorXd&)>& value,
                         const Eigen::VectorXd& start, const OptimizerConfig& config);

}  // namespace oipp
