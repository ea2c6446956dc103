#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "oipp/experiment.hpp"

using namespace oipp;

TEST_CASE("aggregate") {
  const auto a = aggregate({1.0, 2.0, 3.0, 4.0});
  CHECK(a.mean == doctest::Approx(2.5));
  CHECK(a.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const auto one = aggregate({0.7});
  CHECK(one.mean == 0.7);
  CHECK(one.std == 0.0);
  CHECK(aggregate({}).mean == 0.0);
}

TEST_CASE("loglog_slope") {
  std::vector<double> x, y2, y3;
  for (double n : {100.0, 200.0, 400.0, 800.0}) {
    x.push_back(n);
    y2.push_back(3e-6 * n * n);
    y3.push_back(0.5 * n * n * n);
  }
  CHECK(loglog_slope(x, y2) == doctest::Approx(2.0));
  CHECK(loglog_slope(x, y3) == doctest::Approx(3.0));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), InputError);
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {0.0, 1.0}), InputError);
}

TEST_CASE("summary round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "oipp_summary.txt").string();
  RunSummary s{0.123456789012345, -1.25, 543.2, 3.5, 2950};
  write_summary(path, s);
  const auto r = read_summary(path);
  CHECK(r.final_rmse == s.final_rmse);
  CHECK(r.final_entropy == s.final_entropy);
  CHECK(r.path_length == s.path_length);
  CHECK(r.measurements == s.measurements);
  std::filesystem::remove(path);
}

TEST_CASE("matrix table") {
  AppConfig cfg;
  cfg.mission.budget = 40.0;
  cfg.mission.metric_grid = 10;
  cfg.mission.seed = 5;
  cfg.matrix.trials = 2;
  cfg.matrix.planners = {PlannerKind::ours, PlannerKind::random};
  cfg.matrix.mappers = {MapperKind::exact};
  cfg.matrix.epsilons = {0.1};
  const auto scenario = build_scenario(cfg.world);
  const auto dir = std::filesystem::temp_directory_path() / "oipp_matrix";
  std::filesystem::remove_all(dir);

  const auto rows = run_matrix(cfg, scenario, dir.string());
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.trials == 2);
    CHECK(r.failed == 0);
    CHECK(r.rmse.mean > 0.0);
  }
  CHECK(std::filesystem::exists(dir / "ours_exact_eps0.1" / "trial_1" / "metrics.csv"));
  const auto s0 = read_summary((dir / "ours_exact_eps0.1" / "trial_0" / "summary.txt").string());
  const auto s1 = read_summary((dir / "ours_exact_eps0.1" / "trial_1" / "summary.txt").string());
  CHECK(rows[0].rmse.mean == doctest::Approx(0.5 * (s0.final_rmse + s1.final_rmse)));

  std::ifstream in(dir / "table.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 3);

  cfg.matrix.trials = 1;
  cfg.matrix.planners = {PlannerKind::ours};
  const auto single = run_matrix(cfg, scenario, dir.string());
  CHECK(single[0].rmse.std == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bench rows") {
  const auto r = bench_scaling(MapperKind::ssgp, 200, 100, 1);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].n == 100);
  CHECK(r.rows[0].m == 15);
  CHECK(r.rows[1].m == 30);
  CHECK(std::isfinite(r.slope));
  const auto e = bench_scaling(MapperKind::exact, 200, 100, 1);
  CHECK(e.rows[1].m == 0);
  CHECK_THROWS_AS(bench_scaling(MapperKind::exact, 100, 100, 1), InputError);
}
