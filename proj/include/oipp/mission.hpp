#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oipp/mapper.hpp"
#include "oipp/planner.hpp"
#include "oipp/vehicle.hpp"
#include "oipp/world.hpp"

namespace oipp {

enum class PlannerKind { ours, rig_receding_horizon, random };

PlannerKind parse_planner(const std::string& name);
std::string to_string(PlannerKind kind);

struct MissionConfig {
  /// Mission time budget in seconds.
  double budget = 600.0;
  /// Period between map updates in seconds.
  double update_period = 10.0;
  double sensor_rate = 5.0;
  double sensor_noise = 0.02;
  double surge_speed = 1.0;
  double turn_rate_limit = 0.5;
  double lookahead = 5.0;
  /// Fraction of the latest planned path traversed before replanning.
  double replan_trigger = 0.7;
  /// Bootstrap path length as a fraction of budget * speed.
  double bootstrap_fraction = 0.05;
  PlannerKind planner = PlannerKind::ours;
  MapperKind mapper = MapperKind::ssgp;
  std::uint64_t seed = 0;
  /// Fixed simulated cost per replan; real-time mode charges wall time instead.
  bool deterministic = true;
  double planning_charge = 2.0;
  int metric_grid = 100;
  PlannerConfig planner_config;
  MapperConfig mapper_config;

  [[nodiscard]] double dt() const { return 1.0 / sensor_rate; }
  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  Point position = Point::Zero();
  double heading = 0.0;
};

struct MissionEvent {
  double t = 0.0;
  std::string kind;
  std::string detail;
};

struct MetricSample {
  double t = 0.0;
  double rmse = 0.0;
  double entropy = 0.0;
};

struct TimingSample {
  double t = 0.0;
  std::string component;
  double wall_seconds = 0.0;
};

struct UpdateRecord {
  double t = 0.0;
  std::size_t batch_size = 0;
  std::size_t inducing = 0;
  std::size_t retained = 0;
  /// Measurements absorbed by successful updates so far.
  std::size_t total_observed = 0;
  bool skipped = false;
};

struct PlanRecord {
  double launched = 0.0;
  double delivered = 0.0;
  Path path;
};

struct MissionLog {
  std::vector<TrajectorySample> trajectory;
  std::vector<Measurement> measurements;
  std::vector<MissionEvent> events;
  std::vector<MetricSample> metrics;
  std::vector<TimingSample> timing;
  std::vector<UpdateRecord> updates;
  std::vector<PlanRecord> plans;
  double path_length = 0.0;
  double gp_compute_seconds = 0.0;
};

struct MapMetrics {
  double rmse = 0.0;
  double entropy = 0.0;
};

/// RMSE against the field and mean entropy over the given grid points.
MapMetrics compute_metrics(const Posterior& posterior, const ScalarField& field, const PointSet& grid);

/// Receding-horizon baseline: RRT* without the entropy bias, scored by
/// unnormalized cumulative entropy within the radius.
Path rig_receding_horizon_plan(const Posterior& posterior, const Point& root, const Bounds& bounds,
                               const ObstacleMap& obstacles, const PlannerConfig& config, std::mt19937_64& rng);

/// Random collision-free waypoint walk of total length drawn from [r/2, r].
Path random_plan(const Point& root, const Bounds& bounds, const ObstacleMap& obstacles,
                 const PlannerConfig& config, std::mt19937_64& rng);

/// Runs one mission from the domain origin.
MissionLog run_mission(const MissionConfig& config, const ScalarField& field, const ObstacleMap& obstacles);

/// Writes metrics.csv, trajectory.csv, events.csv and timing.csv into `dir`.
void write_mission_csv(const MissionLog& log, const std::string& dir);

/// Value of the last metric sample taken at or before t.
MetricSample metric_at(const MissionLog& log, double t);

}  // namespace oipp
