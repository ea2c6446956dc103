#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oipp {

using Point = Eigen::Vector2d;
/// Row-major list of 2-D locations, one point per row.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// Sample locations with their scalar measurements.
struct DataBatch {
  PointSet inputs;
  Eigen::VectorXd targets;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
  [[nodiscard]] bool empty() const { return targets.size() == 0; }
};

/// Posterior marginal at a single location. Variance is the latent
/// function variance; observation noise is not included.
struct PosteriorPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PointSet make_points(std::initializer_list<Point> points);

/// Concatenates two batches, keeping the order of `a` followed by `b`.
DataBatch concat(const DataBatch& a, const DataBatch& b);

/// Rows of `points` selected by `indices`, in that order.
template <typename Index>
PointSet gather_rows(const PointSet& points, const std::vector<Index>& indices) {
  PointSet out(static_cast<Eigen::Index>(indices.size()), 2);
  for (std::size_t i = 0; i < indices.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(indices[i]));
  return out;
}

}  // namespace oipp
