#include <string>

#include "doctest.h"
#include "oipp/config.hpp"

using namespace oipp;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)read_app_config(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal configuration") {
  const auto cfg = read_app_config(ConfigFile::parse("[mission]\nbudget = 300\n"));
  CHECK(cfg.mission.budget == 300.0);
  CHECK_FALSE(cfg.mission.deterministic);
  CHECK(cfg.mission.planner == PlannerKind::ours);
  CHECK(cfg.mission.mapper == MapperKind::ssgp);
  CHECK(cfg.world.default_obstacles);
  CHECK(cfg.matrix.trials == 10);
}

TEST_CASE("full configuration") {
  const std::string text =
      "# comment\n"
      "[mission]\n"
      "budget = 120  # seconds\n"
      "planner = random\n"
      "mapper = exact\n"
      "seed = 7\n"
      "deterministic = true\n"
      "[planner]\n"
      "epsilon = 0.25\n"
      "radius = 20\n"
      "[mapper]\n"
      "iterations = 4\n"
      "[world]\n"
      "seed = 3\n"
      "rect = 10 10 20 20\n"
      "circle = 50 50 5\n"
      "circle = 70 30 4\n"
      "[matrix]\n"
      "trials = 3\n"
      "planners = ours, random\n"
      "epsilons = 0.1, 0.5\n";
  const auto cfg = read_app_config(ConfigFile::parse(text));
  CHECK(cfg.mission.planner == PlannerKind::random);
  CHECK(cfg.mission.mapper == MapperKind::exact);
  CHECK(cfg.mission.seed == 7);
  CHECK(cfg.mission.deterministic);
  CHECK(cfg.mission.planner_config.epsilon == 0.25);
  CHECK(cfg.mission.planner_config.radius == 20.0);
  CHECK(cfg.mission.mapper_config.iterations == 4);
  CHECK(cfg.world.field_seed == 3);
  CHECK(cfg.world.rectangles.size() == 1);
  CHECK(cfg.world.circles.size() == 2);
  CHECK_FALSE(cfg.world.default_obstacles);
  CHECK(cfg.matrix.trials == 3);
  CHECK(cfg.matrix.planners.size() == 2);
  CHECK(cfg.matrix.epsilons.back() == 0.5);
}

TEST_CASE("configuration errors name the field") {
  CHECK(error_of("[mission]\nseed = 1\n").find("budget") != std::string::npos);
  CHECK(error_of("[mission]\nbudget = 10\nspeeed = 2\n").find("speeed") != std::string::npos);
  CHECK(error_of("[mission]\nbudget = ten\n").find("budget") != std::string::npos);
  CHECK(error_of("[mission]\nbudget = 10\n[planner]\nepsilon = 2\n").find("epsilon") != std::string::npos);
  CHECK(error_of("[mission]\nbudget = 10\n[robot]\n").find("robot") != std::string::npos);
  CHECK(error_of("[mission]\nbudget = 10\nplanner = greedy\n").find("planner") != std::string::npos);
  CHECK(error_of("[mission]\nbudget = 10\n[world]\nrect = 1 2 3\n").find("rect") != std::string::npos);
  CHECK(error_of("budget = 10\n").find("line 1") != std::string::npos);
  CHECK(error_of("[mission\n").find("line 1") != std::string::npos);
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/oipp.ini"), ConfigError);
}

TEST_CASE("scenario construction") {
  WorldConfig w;
  const auto s = build_scenario(w);
  CHECK(s.field.nx() > 1);
  CHECK(s.obstacles.rectangles().size() + s.obstacles.circles().size() > 0);
  CHECK_FALSE(s.obstacles.point_collides(Point(0, 0)));

  w.default_obstacles = false;
  CHECK(build_scenario(w).obstacles.rectangles().empty());

  w.rectangles.push_back({Point(90, 90), Point(120, 95)});
  CHECK_THROWS_AS(build_scenario(w), InputError);
}
