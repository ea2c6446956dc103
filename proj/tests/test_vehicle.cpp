#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oipp/vehicle.hpp"

using namespace oipp;

TEST_CASE("wrap_angle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3.0 * std::numbers::pi / 2.0) == doctest::Approx(-std::numbers::pi / 2.0));
  CHECK(wrap_angle(-7.0) == doctest::Approx(-7.0 + 2.0 * std::numbers::pi));
}

TEST_CASE("path arc length") {
  const Path p({Point(0, 0), Point(3, 4), Point(3, 10)});
  CHECK(p.length() == doctest::Approx(11.0));
  CHECK(p.cumulative()[1] == doctest::Approx(5.0));
  CHECK((p.point_at(2.5) - Point(1.5, 2.0)).norm() < 1e-12);
  CHECK((p.point_at(-1.0) - Point(0, 0)).norm() < 1e-12);
  CHECK((p.point_at(50.0) - Point(3, 10)).norm() < 1e-12);
  CHECK_THROWS_AS(Path(std::vector<Point>{}), InputError);
}

TEST_CASE("cumulative length matches the segment sum") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<Point> w;
    for (int i = 0; i < 1 + k % 9; ++i) w.emplace_back(u(rng), u(rng));
    const Path p(w);
    double sum = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i) sum += (w[i] - w[i - 1]).norm();
    CHECK(std::abs(p.length() - sum) < 1e-9);
  }
}

TEST_CASE("append drops the duplicate joint") {
  Path p({Point(0, 0), Point(1, 0)});
  p.append(Path({Point(1, 0), Point(1, 2)}));
  CHECK(p.waypoints().size() == 3);
  CHECK(p.length() == doctest::Approx(3.0));
}

TEST_CASE("path_progress") {
  const Path p({Point(0, 0), Point(10, 0)});
  const auto at = [&](double x, double y) { return path_progress(VehicleState{Point(x, y), 0.0, 1.0}, p); };
  CHECK(at(0, 0).arc == 0.0);
  CHECK(at(0, 0).fraction == 0.0);
  CHECK(at(10, 0).arc == doctest::Approx(10.0));
  CHECK(at(10, 0).fraction == doctest::Approx(1.0));
  CHECK(at(5, 0).arc == doctest::Approx(5.0));
  CHECK(at(5, 0).fraction == doctest::Approx(0.5));
  CHECK(at(5, 3).arc == doctest::Approx(5.0));
  CHECK(path_progress(VehicleState{Point(2, 2), 0.0, 1.0}, Path({Point(1, 1)})).fraction == 1.0);
}

TEST_CASE("los_heading") {
  const Path straight({Point(-10, 0), Point(100, 0)});
  SUBCASE("on the path it follows the path direction") {
    for (double x : {-5.0, 0.0, 40.0}) {
      CHECK(los_heading(VehicleState{Point(x, 0), 1.0, 1.0}, straight, 5.0) == doctest::Approx(0.0));
    }
    const Path diagonal({Point(0, 0), Point(50, 50)});
    CHECK(los_heading(VehicleState{Point(10, 10), 0.0, 1.0}, diagonal, 7.0) ==
          doctest::Approx(std::numbers::pi / 4.0));
  }
  SUBCASE("lateral offset of one meter") {
    CHECK(los_heading(VehicleState{Point(0, 1), 0.0, 1.0}, straight, 5.0) == doctest::Approx(-0.1974).epsilon(1e-4));
    CHECK(los_heading(VehicleState{Point(0, 1), 0.0, 1.0}, straight, 5.0) == doctest::Approx(-std::atan(0.2)));
  }
  SUBCASE("past the end it points back to the last waypoint") {
    CHECK(std::abs(los_heading(VehicleState{Point(105, 0), 0.0, 1.0}, straight, 5.0)) ==
          doctest::Approx(std::numbers::pi));
    CHECK(los_heading(VehicleState{Point(100, 10), 0.0, 1.0}, straight, 5.0) ==
          doctest::Approx(-std::numbers::pi / 2.0));
  }
}

TEST_CASE("step kinematics") {
  const VehicleState s{Point(1, 2), 0.3, 1.0};
  SUBCASE("straight advance") {
    const auto n = step(s, 0.3, 0.2, 0.5);
    CHECK((n.position - s.position).norm() == doctest::Approx(0.2));
    CHECK(n.heading == 0.3);
  }
  SUBCASE("turn-rate limit") {
    const auto n = step(s, 2.0, 0.2, 0.5);
    CHECK(n.heading == doctest::Approx(0.4));
    const auto snap = step(s, 2.0, 0.2, std::numeric_limits<double>::infinity());
    CHECK(snap.heading == doctest::Approx(2.0));
  }
  SUBCASE("turns the short way across the branch cut") {
    const VehicleState w{Point(0, 0), 3.0, 1.0};
    const auto n = step(w, -3.0, 0.2, 0.5);
    CHECK(n.heading == doctest::Approx(3.1));
  }
  SUBCASE("hundred straight steps") {
    VehicleState v{Point(0, 0), 0.0, 1.0};
    for (int i = 0; i < 100; ++i) v = step(v, 0.0, 0.2, 0.5);
    CHECK(std::abs(v.position.x() - 20.0) < 1e-9);
    CHECK(v.position.y() == 0.0);
  }
  CHECK_THROWS_AS(step(s, 0.0, 0.0, 0.5), InputError);
}

TEST_CASE("speed is constant for any command") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ang(-4.0, 4.0);
  VehicleState v{Point(0, 0), 0.0, 1.0};
  for (int i = 0; i < 500; ++i) {
    const auto n = step(v, ang(rng), 0.2, 0.5);
    CHECK(std::abs((n.position - v.position).norm() - 0.2) < 1e-12);
    v = n;
  }
}

TEST_CASE("following a straight path from on-path start keeps zero cross-track error") {
  const Path p({Point(0, 0), Point(200, 0)});
  VehicleState v{Point(0, 0), 0.0, 1.0};
  for (int i = 0; i < 500; ++i) {
    v = step(v, los_heading(v, p, 5.0), 0.2, 0.5);
    CHECK(std::abs(v.position.y()) <= 1e-9);
  }
}

TEST_CASE("cross-track error shrinks after the first turn") {
  const Path p({Point(0, 0), Point(500, 0)});
  for (double offset : {-8.0, -3.0, 2.0, 6.0}) {
    for (double heading : {-1.0, 0.0, 1.2}) {
      VehicleState v{Point(5, offset), heading, 1.0};
      bool turned = false;
      double previous = std::abs(offset);
      for (int i = 0; i < 1000; ++i) {
        const double cmd = los_heading(v, p, 5.0);
        turned = turned || std::abs(wrap_angle(cmd - v.heading)) <= 0.5 * 0.2;
        v = step(v, cmd, 0.2, 0.5);
        const double err = std::abs(v.position.y());
        if (turned) CHECK(err <= previous + 1e-9);
        previous = err;
      }
      CHECK(previous < 1e-3);
    }
  }
}
