#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oipp/config.hpp"
#include "oipp/mission.hpp"

namespace oipp {

struct RunSummary {
  double final_rmse = 0.0;
  double final_entropy = 0.0;
  double path_length = 0.0;
  double gp_compute_seconds = 0.0;
  std::size_t measurements = 0;
};

RunSummary summarize(const MissionLog& log);
void write_summary(const std::string& path, const RunSummary& summary);
RunSummary read_summary(const std::string& path);

/// One mission; writes the four CSVs and summary.txt into `out_dir`.
RunSummary run_single(const MissionConfig& mission, const Scenario& scenario, const std::string& out_dir);

struct Aggregate {
  double mean = 0.0;
  /// Sample standard deviation; zero for a single value.
  double std = 0.0;
};

Aggregate aggregate(const std::vector<double>& values);

struct MatrixRow {
  PlannerKind planner = PlannerKind::ours;
  MapperKind mapper = MapperKind::ssgp;
  double epsilon = 0.1;
  int trials = 0;
  int failed = 0;
  Aggregate rmse;
  Aggregate entropy;
  Aggregate path_length;
  Aggregate compute_seconds;
};

/// Every planner x mapper x epsilon combination for matrix.trials trials with
/// seeds mission.seed + trial. Per-trial artifacts go to
/// out_dir/<planner>_<mapper>_eps<epsilon>/trial_<k>; table.csv to out_dir.
std::vector<MatrixRow> run_matrix(const AppConfig& config, const Scenario& scenario, const std::string& out_dir);
void write_table(const std::string& path, const std::vector<MatrixRow>& rows);

struct BenchRow {
  std::size_t n = 0;
  double wall_seconds = 0.0;
  std::size_t m = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double slope = 0.0;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Times one hyperparameter-update cycle at n = step, 2 step, ..., max_n.
/// exact: one log marginal likelihood and gradient evaluation on n points.
/// ssgp: one streaming update of a 50-point batch onto a state that has seen
/// n - 50 points, with m = ceil(0.15 n) unless `inducing_cap` binds.
/// sgpr/svgp: one collapsed or uncollapsed bound and gradient evaluation.
BenchResult bench_scaling(MapperKind kind, std::size_t max_n, std::size_t step, std::uint64_t seed,
                          std::size_t inducing_cap = 1000000, int repeats = 1);
void write_bench(const std::string& path, const BenchResult& result);

}  // namespace oipp
