#pragma once

#include <vector>

#include "oipp/types.hpp"

namespace oipp {

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

struct VehicleState {
  Point position = Point::Zero();
  double heading = 0.0;
  double surge_speed = 1.0;
};

/// Polyline of waypoints with cached cumulative arc length.
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<Point> waypoints);

  [[nodiscard]] const std::vector<Point>& waypoints() const { return waypoints_; }
  [[nodiscard]] bool empty() const { return waypoints_.empty(); }
  [[nodiscard]] double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  /// Arc length at each waypoint; starts at 0.
  [[nodiscard]] const std::vector<double>& cumulative() const { return cumulative_; }
  [[nodiscard]] const Point& back() const { return waypoints_.back(); }

  /// Point at arc length s, clamped to the ends.
  [[nodiscard]] Point point_at(double s) const;
  /// Arc length of the path point closest to p, searching from `from_arc` on.
  [[nodiscard]] double closest_arc(const Point& p, double from_arc = 0.0) const;

  /// Appends the waypoints of `tail`, dropping a duplicate joint.
  void append(const Path& tail);

 private:
  std::vector<Point> waypoints_;
  std::vector<double> cumulative_;
};

struct PathProgress {
  double arc = 0.0;
  double fraction = 0.0;
};

/// Arc length of the closest path point and its fraction of the total.
/// A zero-length path reports fraction 1.
PathProgress path_progress(const VehicleState& state, const Path& path, double from_arc = 0.0);

/// Line-of-sight guidance: heading toward the path point `lookahead` meters
/// beyond the vehicle's progress, or toward the last waypoint near the end.
double los_heading(const VehicleState& state, const Path& path, double lookahead, double from_arc = 0.0);

/// Unicycle step with a turn-rate limit; speed is unchanged.
VehicleState step(const VehicleState& state, double heading_cmd, double dt, double turn_rate_limit);

}  // namespace oipp
