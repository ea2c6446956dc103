#include "oipp/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oipp {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a, two_pi);
  if (w > std::numbers::pi) w -= two_pi;
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

Path::Path(std::vector<Point> waypoints) : waypoints_(std::move(waypoints)) {
  if (waypoints_.empty()) throw InputError("path needs at least one waypoint");
  cumulative_.reserve(waypoints_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    if (!waypoints_[i].allFinite()) throw InputError("path waypoints must be finite");
    cumulative_.push_back(cumulative_.back() + (waypoints_[i] - waypoints_[i - 1]).norm());
  }
}

Point Path::point_at(double s) const {
  if (waypoints_.empty()) throw InputError("empty path");
  if (s <= 0.0) return waypoints_.front();
  if (s >= length()) return waypoints_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto i = static_cast<std::size_t>(it - cumulative_.begin());
  const double seg = cumulative_[i] - cumulative_[i - 1];
  const double t = seg > 0.0 ? (s - cumulative_[i - 1]) / seg : 0.0;
  return waypoints_[i - 1] + t * (waypoints_[i] - waypoints_[i - 1]);
}

double Path::closest_arc(const Point& p, double from_arc) const {
  if (waypoints_.empty()) throw InputError("empty path");
  if (waypoints_.size() == 1) return 0.0;
  from_arc = std::clamp(from_arc, 0.0, length());
  double best_d = std::numeric_limits<double>::infinity();
  double best_s = from_arc;
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    if (cumulative_[i] < from_arc) continue;
    const Point a = cumulative_[i - 1] < from_arc ? point_at(from_arc) : waypoints_[i - 1];
    const double s0 = std::max(cumulative_[i - 1], from_arc);
    const Point ab = waypoints_[i] - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const double d = (p - (a + t * ab)).norm();
    if (d < best_d) {
      best_d = d;
      best_s = s0 + t * (cumulative_[i] - s0);
    }
  }
  return best_s;
}

void Path::append(const Path& tail) {
  if (tail.empty()) return;
  if (waypoints_.empty()) {
    *this = tail;
    return;
  }
  std::vector<Point> pts = waypoints_;
  std::size_t start = (tail.waypoints_.front() - pts.back()).norm() < 1e-12 ? 1 : 0;
  pts.insert(pts.end(), tail.waypoints_.begin() + static_cast<std::ptrdiff_t>(start), tail.waypoints_.end());
  *this = Path(std::move(pts));
}

PathProgress path_progress(const VehicleState& state, const Path& path, double from_arc) {
  PathProgress p;
  p.arc = path.closest_arc(state.position, from_arc);
  p.fraction = path.length() > 0.0 ? p.arc / path.length() : 1.0;
  return p;
}

double los_heading(const VehicleState& state, const Path& path, double lookahead, double from_arc) {
  const double s = path.closest_arc(state.position, from_arc);
  const Point target = s + lookahead >= path.length() ? path.back() : path.point_at(s + lookahead);
  const Point d = target - state.position;
  if (d.squaredNorm() == 0.0) return state.heading;
  return std::atan2(d.y(), d.x());
}

VehicleState step(const VehicleState& state, double heading_cmd, double dt, double turn_rate_limit) {
  if (!(dt > 0.0)) throw InputError("step: dt must be positive");
  VehicleState next = state;
  const double max_turn = turn_rate_limit * dt;
  const double delta = std::clamp(wrap_angle(heading_cmd - state.heading), -max_turn, max_turn);
  next.heading = wrap_angle(state.heading + delta);
  const double dist = state.surge_speed * dt;
  next.position += dist * Point(std::cos(next.heading), std::sin(next.heading));
  return next;
}

}  // namespace oipp
