#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "doctest.h"
#include "oipp/mission.hpp"

using namespace oipp;

namespace {

// Answers the true field plus a constant bias at a fixed variance.
class FieldPosterior final : public Posterior {
 public:
  FieldPosterior(const ScalarField& field, double bias, double variance)
      : field_(field), bias_(bias), variance_(variance), hyper_(Hyperparameters::from_natural(10.0, 1.0, 0.01)) {}
  [[nodiscard]] std::vector<PosteriorPrediction> predict(const PointSet& query) const override {
    std::vector<PosteriorPrediction> out;
    for (Eigen::Index i = 0; i < query.rows(); ++i) {
      out.push_back({field_.at(query.row(i).transpose()) + bias_, variance_});
    }
    return out;
  }
  [[nodiscard]] const Hyperparameters& hyper() const override { return hyper_; }

 private:
  const ScalarField& field_;
  double bias_;
  double variance_;
  Hyperparameters hyper_;
};

MissionConfig short_mission(PlannerKind planner, MapperKind mapper, std::uint64_t seed) {
  MissionConfig c;
  c.budget = 120.0;
  c.planner = planner;
  c.mapper = mapper;
  c.seed = seed;
  c.metric_grid = 20;
  return c;
}

const ScalarField& test_field() {
  static const ScalarField f = generate_synthetic_field(1);
  return f;
}

const ObstacleMap& test_obstacles() {
  static const ObstacleMap o({Rectangle{Point(30, 55), Point(45, 70)}}, {Circle{Point(70, 70), 8.0}});
  return o;
}

}  // namespace

TEST_CASE("compute_metrics") {
  const auto& f = test_field();
  const auto grid = evaluation_grid(f.bounds(), {}, 25);
  const double unit_entropy_var = 1.0 / (2.0 * std::numbers::pi * std::numbers::e);

  SUBCASE("exact mean at unit-entropy variance") {
    const auto m = compute_metrics(FieldPosterior(f, 0.0, unit_entropy_var), f, grid);
    CHECK(m.rmse == doctest::Approx(0.0));
    CHECK(m.entropy == doctest::Approx(0.0));
  }
  SUBCASE("constant bias") {
    const auto m = compute_metrics(FieldPosterior(f, -0.3, 1.0), f, grid);
    CHECK(m.rmse == doctest::Approx(0.3));
    CHECK(m.entropy == doctest::Approx(entropy_of_variance(1.0)));
  }
  SUBCASE("prior on a normalized field") {
    const auto m = compute_metrics(PriorPosterior(Hyperparameters::from_natural(10.0, 1.0, 0.01)), f, grid);
    CHECK(std::abs(m.rmse - 1.0) < 0.1);
  }
  SUBCASE("empty grid") {
    const auto m = compute_metrics(FieldPosterior(f, 1.0, 1.0), f, PointSet(0, 2));
    CHECK(m.rmse == 0.0);
  }
}

TEST_CASE("random_plan") {
  const Bounds b;
  PlannerConfig cfg;

  SUBCASE("length and clearance") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 200; ++k) {
      const auto p = random_plan(Point(50, 50), b, test_obstacles(), cfg, rng);
      CHECK(p.length() >= 0.5 * cfg.radius - 1e-9);
      CHECK(p.length() <= cfg.radius + 1e-9);
      const auto& w = p.waypoints();
      for (std::size_t i = 1; i < w.size(); ++i) {
        CHECK_FALSE(test_obstacles().segment_collides(w[i - 1], w[i], cfg.inflation));
        CHECK(b.contains(w[i]));
      }
    }
  }
  SUBCASE("first heading is uniform") {
    std::mt19937_64 rng(2);
    std::array<int, 12> bins{};
    const int n = 1000;
    for (int k = 0; k < n; ++k) {
      const auto p = random_plan(Point(50, 50), b, {}, cfg, rng);
      const Point d = p.waypoints()[1] - p.waypoints()[0];
      const double a = std::atan2(d.y(), d.x()) + std::numbers::pi;
      ++bins[static_cast<std::size_t>(std::min(11.0, std::floor(a / (2.0 * std::numbers::pi) * 12.0)))];
    }
    double chi2 = 0.0;
    const double expected = n / 12.0;
    for (int c : bins) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 24.72);
  }
  SUBCASE("corner start reaches the inner box") {
    PlannerConfig boot = cfg;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      std::mt19937_64 rng(seed);
      const auto p = random_plan(Point(0, 0), b, test_obstacles(), boot, rng);
      CHECK(p.waypoints().size() > 1);
    }
  }
  SUBCASE("boxed-in root") {
    const ObstacleMap walls({Rectangle{Point(40, 40), Point(60, 49)}, Rectangle{Point(40, 51), Point(60, 60)},
                             Rectangle{Point(40, 49), Point(49, 51)}, Rectangle{Point(51, 49), Point(60, 51)}},
                            {});
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(random_plan(Point(50, 50), b, walls, cfg, rng), PlannerError);
  }
}

TEST_CASE("receding-horizon baseline plan") {
  const Bounds b;
  PlannerConfig cfg;
  const PriorPosterior prior(Hyperparameters::from_natural(10.0, 1.0, 0.01));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 r1(seed);
    std::mt19937_64 r2(seed);
    const auto p = rig_receding_horizon_plan(prior, Point(20, 20), b, test_obstacles(), cfg, r1);
    CHECK(p.waypoints() == rig_receding_horizon_plan(prior, Point(20, 20), b, test_obstacles(), cfg, r2).waypoints());
    CHECK(p.length() <= cfg.radius + 1e-9);
    const auto& w = p.waypoints();
    for (std::size_t i = 1; i < w.size(); ++i) {
      CHECK(b.contains(w[i]));
      CHECK_FALSE(test_obstacles().segment_collides(w[i - 1], w[i], cfg.inflation));
    }
  }
}

TEST_CASE("zero budget mission") {
  auto c = short_mission(PlannerKind::ours, MapperKind::exact, 1);
  c.budget = 0.0;
  const auto log = run_mission(c, test_field(), test_obstacles());
  CHECK(log.measurements.empty());
  CHECK(log.metrics.empty());
  CHECK(log.path_length == 0.0);
  CHECK_THROWS_AS(metric_at(log, 10.0), InputError);
}

TEST_CASE("mission invariants") {
  for (auto planner : {PlannerKind::ours, PlannerKind::rig_receding_horizon, PlannerKind::random}) {
    CAPTURE(to_string(planner));
    const auto c = short_mission(planner, MapperKind::exact, 4);
    const auto log = run_mission(c, test_field(), test_obstacles());
    const auto steps = static_cast<std::size_t>(std::llround(c.budget * c.sensor_rate));

    std::size_t out_of_domain = 0;
    for (const auto& e : log.events) {
      out_of_domain += e.kind == "out_of_domain" ? 1 : 0;
      CHECK(e.kind != "collision");
    }
    CHECK(log.trajectory.size() == steps + 1);
    CHECK(log.trajectory.back().t <= c.budget + 1e-9);

    double travelled = 0.0;
    int stationary = 0;
    for (std::size_t i = 1; i < log.trajectory.size(); ++i) {
      const double s = (log.trajectory[i].position - log.trajectory[i - 1].position).norm();
      travelled += s;
      if (s == 0.0) {
        ++stationary;
      } else {
        CHECK(s == doctest::Approx(c.surge_speed * c.dt()));
      }
    }
    CHECK(log.path_length == doctest::Approx(travelled));
    CHECK(log.measurements.size() + out_of_domain + static_cast<std::size_t>(stationary) == steps);
    if (planner == PlannerKind::rig_receding_horizon) {
      CHECK(stationary > 0);
    } else {
      CHECK(stationary == 0);
    }

    std::size_t absorbed = 0;
    for (std::size_t i = 0; i < log.updates.size(); ++i) {
      const auto& u = log.updates[i];
      if (!u.skipped) absorbed += u.batch_size;
      CHECK(u.total_observed == absorbed);
      if (i > 0 && i + 1 < log.updates.size()) {
        CHECK(u.t - log.updates[i - 1].t == doctest::Approx(c.update_period));
      }
    }
    CHECK(absorbed == log.measurements.size());
    CHECK(log.metrics.size() == log.updates.size());
    for (const auto& p : log.plans) CHECK(p.delivered >= p.launched);
  }
}

TEST_CASE("streaming mapper bounds memory and inducing points") {
  const auto c = short_mission(PlannerKind::ours, MapperKind::ssgp, 2);
  const auto log = run_mission(c, test_field(), test_obstacles());
  REQUIRE(!log.updates.empty());
  std::size_t previous = 0;
  for (const auto& u : log.updates) {
    CHECK(u.inducing >= 1);
    CHECK(u.inducing <= c.mapper_config.inducing_cap);
    CHECK(u.retained <= u.batch_size);
    CHECK(u.total_observed >= previous);
    previous = u.total_observed;
  }
  CHECK(previous <= log.measurements.size());
}

TEST_CASE("deterministic missions repeat exactly") {
  const auto c = short_mission(PlannerKind::ours, MapperKind::ssgp, 9);
  const auto a = run_mission(c, test_field(), test_obstacles());
  const auto b = run_mission(c, test_field(), test_obstacles());
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].rmse == b.metrics[i].rmse);
    CHECK(a.metrics[i].entropy == b.metrics[i].entropy);
  }
  CHECK(a.path_length == b.path_length);
  CHECK(metric_at(a, 1e9).rmse == a.metrics.back().rmse);
}

TEST_CASE("mission csv files") {
  const auto c = short_mission(PlannerKind::random, MapperKind::exact, 3);
  const auto log = run_mission(c, test_field(), test_obstacles());
  const auto dir = std::filesystem::temp_directory_path() / "oipp_mission_csv";
  std::filesystem::remove_all(dir);
  write_mission_csv(log, dir.string());
  const std::array<std::pair<const char*, const char*>, 4> files{{{"metrics.csv", "t,rmse,entropy"},
                                                                  {"trajectory.csv", "t,x,y,heading"},
                                                                  {"events.csv", "t,kind,detail"},
                                                                  {"timing.csv", "t,component,wall_seconds"}}};
  for (const auto& [name, header] : files) {
    std::ifstream in(dir / name);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == header);
  }
  std::ifstream in(dir / "metrics.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == log.metrics.size() + 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mission configuration validation") {
  MissionConfig c;
  c.budget = -1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = MissionConfig{};
  c.replan_trigger = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK(parse_planner("rig") == PlannerKind::rig_receding_horizon);
  CHECK_THROWS_AS(parse_planner("greedy"), InputError);
}

TEST_CASE("posterior snapshots survive later updates") {
  auto mapper = make_mapper(MapperKind::ssgp, MapperConfig{}, 141.4, 1.0, 1);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  const auto batch = [&] {
    DataBatch d;
    d.inputs.resize(50, 2);
    d.targets.resize(50);
    for (Eigen::Index i = 0; i < 50; ++i) {
      d.inputs.row(i) << u(rng), u(rng);
      d.targets(i) = test_field().at(d.inputs.row(i).transpose());
    }
    return d;
  };
  mapper->update(batch());
  const auto snapshot = mapper->posterior();
  PointSet q(3, 2);
  q << 10, 10, 50, 50, 90, 20;
  const auto before = snapshot->predict(q);
  mapper->update(batch());
  const auto after = snapshot->predict(q);
  const auto fresh = mapper->posterior()->predict(q);
  bool changed = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(after[i].mean == before[i].mean);
    CHECK(after[i].variance == before[i].variance);
    changed = changed || fresh[i].mean != before[i].mean;
  }
  CHECK(changed);
  CHECK(mapper->retained_measurements() == 0);
}
