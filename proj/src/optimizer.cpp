#include "oipp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace oipp {

namespace {

double safe_value(const std::function<double(const Eigen::VectorXd&)>& value,
                  const Eigen::VectorXd& x) {
  try {
    const double v = value(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    return -std::numeric_limits<double>::infinity();
  }
}

Eigen::VectorXd project(const Eigen::VectorXd& x, const OptimizerConfig& config) {
  Eigen::VectorXd out = x;
  if (config.lower.size() == x.size()) out = out.cwiseMax(config.lower);
  if (config.upper.size() == x.size()) out = out.cwiseMin(config.upper);
  return out;
}

}  // namespace

OptimizerResult maximize(const std::function<Objective(const Eigen::VectorXd&)>& value_and_gradient,
                         const std::function<double(const Eigen::VectorXd&)>& value,
                         const Eigen::VectorXd& start, const OptimizerConfig& config) {
  OptimizerResult result;
  result.x = project(start, config);
  Objective current = value_and_gradient(result.x);
  result.value = current.value;
  result.initial_value = current.value;

  double step = config.initial_step;
  for (int it = 0; it < config.max_iterations; ++it) {
    if (!current.gradient.allFinite()) {
      result.warning = true;
      return result;
    }
    const Eigen::VectorXd free_grad = project(result.x + current.gradient, config) - result.x;
    if (free_grad.norm() < config.gradient_tolerance) {
      result.converged = true;
      return result;
    }

    // The first trial of each iteration is evaluated with its gradient so an
    // immediate acceptance needs no second evaluation.
    const double largest = current.gradient.cwiseAbs().maxCoeff();
    if (step * largest > config.max_move) step = config.max_move / largest;
    bool accepted = false;
    bool have_gradient = false;
    Eigen::VectorXd trial;
    Objective next;
    for (int bt = 0; bt < config.max_backtracks; ++bt) {
      trial = project(result.x + step * current.gradient, config);
      const double predicted = current.gradient.dot(trial - result.x);
      if (bt == 0) {
        try {
          next = value_and_gradient(trial);
          have_gradient = std::isfinite(next.value);
        } catch (const std::exception&) {
          have_gradient = false;
        }
        next.value = have_gradient ? next.value : -std::numeric_limits<double>::infinity();
      } else {
        next.value = safe_value(value, trial);
      }
      if (next.value >= current.value + config.armijo * predicted && predicted > 0.0) {
        accepted = true;
        break;
      }
      have_gradient = false;
      step *= config.step_shrink;
    }
    if (!accepted) {
      result.warning = true;
      return result;
    }

    const double previous = current.value;
    const Eigen::VectorXd previous_x = result.x;
    const Eigen::VectorXd previous_gradient = current.gradient;
    if (have_gradient) {
      current = std::move(next);
    } else {
      try {
        current = value_and_gradient(trial);
      } catch (const std::exception&) {
        result.warning = true;
        return result;
      }
    }
    result.x = trial;
    result.value = current.value;
    result.iterations = it + 1;
    step = std::min(step * config.step_growth, config.max_step);
    if (config.barzilai_borwein) {
      const Eigen::VectorXd sx = result.x - previous_x;
      const Eigen::VectorXd sy = previous_gradient - current.gradient;
      const double curvature = sx.dot(sy);
      if (curvature > 0.0) step = std::min(sx.squaredNorm() / curvature, config.max_step);
    }

    if (config.relative_tolerance > 0.0 &&
        current.value - previous <= config.relative_tolerance * std::max(1.0, std::abs(previous))) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

}  // namespace oipp
