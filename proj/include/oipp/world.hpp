#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oipp/types.hpp"

namespace oipp {

struct Bounds {
  double xmin = 0.0;
  double xmax = 100.0;
  double ymin = 0.0;
  double ymax = 100.0;

  [[nodiscard]] bool contains(const Point& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
  [[nodiscard]] double width() const { return xmax - xmin; }
  [[nodiscard]] double height() const { return ymax - ymin; }
  [[nodiscard]] double diagonal() const;
};

/// Regular grid of values over a rectangle. values(j, i) sits at row j (y)
/// and column i (x); nodes include both edges of the domain.
class ScalarField {
 public:
  ScalarField(Bounds bounds, Eigen::MatrixXd values);

  [[nodiscard]] const Bounds& bounds() const { return bounds_; }
  [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }
  [[nodiscard]] int nx() const { return static_cast<int>(values_.cols()); }
  [[nodiscard]] int ny() const { return static_cast<int>(values_.rows()); }
  [[nodiscard]] Point node(int i, int j) const;

  /// Bilinear interpolation. Throws InputError outside the domain.
  [[nodiscard]] double at(const Point& p) const;

 private:
  Bounds bounds_;
  Eigen::MatrixXd values_;
};

struct SyntheticFieldSpec {
  Bounds bounds;
  int nx = 101;
  int ny = 101;
  int bumps = 40;
  /// Mean bump width in meters.
  double smoothness = 10.0;
};

ScalarField generate_synthetic_field(std::uint64_t seed, const SyntheticFieldSpec& spec = {});

ScalarField load_field(const std::string& path);
ScalarField read_field(std::istream& in);
void save_field(const std::string& path, const ScalarField& field);
void write_field(std::ostream& out, const ScalarField& field);

struct Rectangle {
  Point lo;
  Point hi;
};

struct Circle {
  Point center;
  double radius = 0.0;
};

class ObstacleMap {
 public:
  ObstacleMap() = default;
  ObstacleMap(std::vector<Rectangle> rects, std::vector<Circle> circles);

  [[nodiscard]] const std::vector<Rectangle>& rectangles() const { return rects_; }
  [[nodiscard]] const std::vector<Circle>& circles() const { return circles_; }
  [[nodiscard]] bool empty() const { return rects_.empty() && circles_.empty(); }

  /// Checks every obstacle lies inside `bounds`.
  void validate(const Bounds& bounds) const;

  [[nodiscard]] bool point_collides(const Point& p, double inflation = 0.0) const;
  [[nodiscard]] bool segment_collides(const Point& a, const Point& b, double inflation = 0.0) const;
  /// Distance from p to the nearest obstacle; zero inside one, infinite for an empty map.
  [[nodiscard]] double clearance(const Point& p) const;
  /// segment_collides, except that a start inside the inflated band only needs
  /// an edge that keeps its clearance and ends outside the band.
  [[nodiscard]] bool edge_blocked(const Point& a, const Point& b, double inflation) const;

 private:
  std::vector<Rectangle> rects_;
  std::vector<Circle> circles_;
};

bool segment_collides(const Point& a, const Point& b, const ObstacleMap& obstacles, double inflation = 0.0);

/// Shortest distance between point p and segment ab.
double point_segment_distance(const Point& p, const Point& a, const Point& b);

struct Measurement {
  Point position = Point::Zero();
  double value = 0.0;
  double timestamp = 0.0;
};

Measurement sense(const ScalarField& field, const Point& pos, double noise_std, std::mt19937_64& rng,
                  double timestamp = 0.0);

/// Centres of an n×n grid of cells over the domain, skipping obstacle cells.
PointSet evaluation_grid(const Bounds& bounds, const ObstacleMap& obstacles, int n = 100);

}  // namespace oipp
