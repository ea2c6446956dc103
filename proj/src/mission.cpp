#include "oipp/mission.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace oipp {

PlannerKind parse_planner(const std::string& name) {
  if (name == "ours") return PlannerKind::ours;
  if (name == "rig_receding_horizon" || name == "rig") return PlannerKind::rig_receding_horizon;
  if (name == "random") return PlannerKind::random;
  throw InputError("unknown planner '" + name + "' (expected ours, rig_receding_horizon or random)");
}

std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::ours: return "ours";
    case PlannerKind::rig_receding_horizon: return "rig_receding_horizon";
    case PlannerKind::random: return "random";
  }
  return "unknown";
}

void MissionConfig::validate() const {
  if (!(budget >= 0.0) || !std::isfinite(budget)) throw InputError("budget must be a finite non-negative number");
  if (!(update_period > 0.0)) throw InputError("update_period must be positive");
  if (!(sensor_rate > 0.0)) throw InputError("sensor_rate must be positive");
  if (!(sensor_noise >= 0.0)) throw InputError("sensor_noise must be non-negative");
  if (!(surge_speed > 0.0)) throw InputError("surge_speed must be positive");
  if (!(turn_rate_limit > 0.0)) throw InputError("turn_rate_limit must be positive");
  if (!(lookahead > 0.0)) throw InputError("lookahead must be positive");
  if (!(replan_trigger > 0.0 && replan_trigger <= 1.0)) throw InputError("replan_trigger must lie in (0, 1]");
  if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0)) throw InputError("bootstrap_fraction must lie in (0, 1]");
  if (!(planning_charge >= 0.0)) throw InputError("planning_charge must be non-negative");
  if (metric_grid < 1) throw InputError("metric_grid must be positive");
  planner_config.validate();
}

MapMetrics compute_metrics(const Posterior& posterior, const ScalarField& field, const PointSet& grid) {
  MapMetrics out;
  if (grid.rows() == 0) return out;
  const auto pred = posterior.predict(grid);
  double se = 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const auto& p = pred[static_cast<std::size_t>(i)];
    const double e = p.mean - field.at(grid.row(i).transpose());
    se += e * e;
    h += entropy(p);
  }
  const auto n = static_cast<double>(grid.rows());
  out.rmse = std::sqrt(se / n);
  out.entropy = h / n;
  return out;
}

Path rig_receding_horizon_plan(const Posterior& posterior, const Point& root, const Bounds& bounds,
                               const ObstacleMap& obstacles, const PlannerConfig& config, std::mt19937_64& rng) {
  config.validate();
  if (!bounds.contains(root)) throw InputError("planner root outside the domain");
  PointSet q(1, 2);
  q.row(0) = root.transpose();
  Tree tree(root, entropy(posterior.predict(q)[0]));
  PlannerConfig cfg = config;
  cfg.epsilon = 0.0;
  expand_tree(tree, root, cfg, posterior, bounds, obstacles, rng);
  int best = -1;
  for (int k = 1; k < tree.size(); ++k) {
    const auto& n = tree.node(k);
    if (n.d > config.radius) continue;
    if (best < 0 || n.h > tree.node(best).h) best = k;
  }
  if (best < 0) throw PlannerError("receding-horizon tree has no node within the radius");
  return tree.path_to(best);
}

Path random_plan(const Point& root, const Bounds& bounds, const ObstacleMap& obstacles,
                 const PlannerConfig& config, std::mt19937_64& rng) {
  config.validate();
  const double m = config.boundary_margin;
  Bounds inner{bounds.xmin + m, bounds.xmax - m, bounds.ymin + m, bounds.ymax - m};
  if (!(inner.xmax > inner.xmin) || !(inner.ymax > inner.ymin)) inner = bounds;
  std::uniform_real_distribution<double> total_d(0.5 * config.radius, config.radius);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> seg_d(config.steer_step, 3.0 * config.steer_step);
  constexpr int tries_per_segment = 200;

  const double total = total_d(rng);
  std::vector<Point> pts{root};
  double remaining = total;
  while (remaining > 1e-9) {
    double len = 0.0;
    bool placed = false;
    for (int k = 0; k < tries_per_segment && !placed; ++k) {
      len = std::min(remaining, seg_d(rng));
      const double a = angle(rng);
      const Point next = pts.back() + len * Point(std::cos(a), std::sin(a));
      if (!inner.contains(next) || obstacles.edge_blocked(pts.back(), next, config.inflation)) continue;
      pts.push_back(next);
      placed = true;
    }
    if (!placed) {
      if (pts.size() > 1) break;
      throw PlannerError("random planner could not place a collision-free segment");
    }
    remaining -= len;
  }
  return Path(std::move(pts));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint64_t out = 0;
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out;
}

Path remaining_path(const Path& path, double arc) {
  std::vector<Point> pts{path.point_at(arc)};
  for (std::size_t i = 0; i < path.waypoints().size(); ++i) {
    if (path.cumulative()[i] > arc + 1e-12) pts.push_back(path.waypoints()[i]);
  }
  return Path(std::move(pts));
}

std::string fmt_point(const Point& p) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << p.x() << ' ' << p.y();
  return s.str();
}

class MissionRunner {
 public:
  MissionRunner(const MissionConfig& config, const ScalarField& field, const ObstacleMap& obstacles)
      : cfg_(config), field_(field), obstacles_(obstacles), bounds_(field.bounds()),
        sensor_rng_(stream_seed(config.seed, 1)), plan_rng_(stream_seed(config.seed, 2)),
        grid_(evaluation_grid(field.bounds(), obstacles, config.metric_grid)) {}

  MissionLog run() {
    const Point start(bounds_.xmin, bounds_.ymin);
    if (obstacles_.point_collides(start)) throw InputError("mission start lies inside an obstacle");
    if (cfg_.budget <= 0.0) return std::move(log_);

    PlannerConfig boot = cfg_.planner_config;
    boot.radius = std::max(cfg_.bootstrap_fraction * cfg_.budget * cfg_.surge_speed, 2.0 * cfg_.dt() * cfg_.surge_speed);
    try {
      path_ = random_plan(start, bounds_, obstacles_, boot, plan_rng_);
    } catch (const PlannerError& e) {
      path_ = Path({start});
      event(0.0, "bootstrap_failed", e.what());
    }
    log_.plans.push_back({0.0, 0.0, path_});
    latest_len_ = path_.length();
    vehicle_.position = start;
    vehicle_.surge_speed = cfg_.surge_speed;
    if (path_.waypoints().size() > 1) {
      const Point d = path_.waypoints()[1] - start;
      vehicle_.heading = std::atan2(d.y(), d.x());
    }
    log_.trajectory.push_back({0.0, vehicle_.position, vehicle_.heading});

    const double dt = cfg_.dt();
    const auto steps = static_cast<long>(std::floor(cfg_.budget / dt + 1e-9));
    double t = 0.0;
    for (long k = 1; k <= steps; ++k) {
      t = static_cast<double>(k) * dt;
      advance(t);
      if (!mapper_) {
        if (hint_ >= path_.length() - 1e-9) {
          bootstrap_done(t);
          launch(t);
        }
        continue;
      }
      if (t - last_update_ >= cfg_.update_period - 1e-9) update(t);
      if (in_flight_ && t >= ready_ - 1e-9) deliver(t);
      if (!in_flight_) {
        const bool exhausted = hint_ >= path_.length() - 1e-9;
        const double frac = latest_len_ > 0.0 ? (hint_ - latest_start_) / latest_len_ : 1.0;
        if (cfg_.planner == PlannerKind::rig_receding_horizon ? exhausted : frac >= cfg_.replan_trigger) launch(t);
      }
    }
    if (!mapper_) bootstrap_done(t);
    if (!pending_.empty()) update(t);
    return std::move(log_);
  }

 private:
  void event(double t, std::string kind, std::string detail) {
    log_.events.push_back({t, std::move(kind), std::move(detail)});
  }

  void advance(double t) {
    if (t <= stopped_until_ + 1e-9) {
      log_.trajectory.push_back({t, vehicle_.position, vehicle_.heading});
      return;
    }
    const double cmd = los_heading(vehicle_, path_, cfg_.lookahead, hint_);
    const Point before = vehicle_.position;
    vehicle_ = step(vehicle_, cmd, cfg_.dt(), cfg_.turn_rate_limit);
    log_.path_length += (vehicle_.position - before).norm();
    hint_ = path_.closest_arc(vehicle_.position, hint_);
    log_.trajectory.push_back({t, vehicle_.position, vehicle_.heading});
    if (!bounds_.contains(vehicle_.position)) {
      event(t, "out_of_domain", fmt_point(vehicle_.position));
      return;
    }
    if (obstacles_.point_collides(vehicle_.position)) event(t, "collision", fmt_point(vehicle_.position));
    const auto m = sense(field_, vehicle_.position, cfg_.sensor_noise, sensor_rng_, t);
    log_.measurements.push_back(m);
    pending_.push_back(m);
  }

  void bootstrap_done(double t) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(pending_.size()));
    for (std::size_t i = 0; i < pending_.size(); ++i) y(static_cast<Eigen::Index>(i)) = pending_[i].value;
    double signal = 1.0;
    if (y.size() >= 2) {
      const double var = (y.array() - y.mean()).square().mean();
      if (var > 1e-6) signal = var;
    }
    mapper_ = make_mapper(cfg_.mapper, cfg_.mapper_config, bounds_.diagonal(), signal, stream_seed(cfg_.seed, 3));
    event(t, "bootstrap_done", std::to_string(pending_.size()) + " measurements");
    update(t);
  }

  void update(double t) {
    DataBatch batch;
    batch.inputs.resize(static_cast<Eigen::Index>(pending_.size()), 2);
    batch.targets.resize(static_cast<Eigen::Index>(pending_.size()));
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      batch.inputs.row(static_cast<Eigen::Index>(i)) = pending_[i].position.transpose();
      batch.targets(static_cast<Eigen::Index>(i)) = pending_[i].value;
    }
    pending_.clear();
    last_update_ = t;

    const auto t0 = Clock::now();
    const MapperUpdate u = mapper_->update(batch);
    const double wall = seconds_since(t0);
    log_.gp_compute_seconds += wall;
    log_.timing.push_back({t, "update", wall});
    if (!u.skipped) total_observed_ += u.batch_size;
    log_.updates.push_back({t, u.batch_size, u.inducing, mapper_->retained_measurements(), total_observed_, u.skipped});
    if (u.skipped) {
      event(t, "update_skipped", u.message);
    } else {
      const auto& h = mapper_->posterior()->hyper();
      std::ostringstream d;
      d << "n=" << u.batch_size << " m=" << u.inducing << " lengthscale=" << h.lengthscale()
        << " signal=" << h.signal_variance() << " noise=" << h.noise_variance()
        << " iterations=" << u.iterations;
      event(t, "update", d.str());
    }

    const auto t1 = Clock::now();
    const MapMetrics mm = compute_metrics(*mapper_->posterior(), field_, grid_);
    log_.timing.push_back({t, "metrics", seconds_since(t1)});
    log_.metrics.push_back({t, mm.rmse, mm.entropy});
  }

  void launch(double t) {
    const auto snapshot = mapper_->posterior();
    const bool rig = cfg_.planner == PlannerKind::rig_receding_horizon;
    Point root = rig ? vehicle_.position : path_.back();
    root.x() = std::clamp(root.x(), bounds_.xmin, bounds_.xmax);
    root.y() = std::clamp(root.y(), bounds_.ymin, bounds_.ymax);

    const auto t0 = Clock::now();
    planned_.reset();
    plan_error_.clear();
    try {
      switch (cfg_.planner) {
        case PlannerKind::ours:
          planned_ = replan(root, *snapshot, bounds_, obstacles_, cfg_.planner_config, plan_rng_).path;
          break;
        case PlannerKind::rig_receding_horizon:
          planned_ = rig_receding_horizon_plan(*snapshot, root, bounds_, obstacles_, cfg_.planner_config, plan_rng_);
          break;
        case PlannerKind::random:
          planned_ = random_plan(root, bounds_, obstacles_, cfg_.planner_config, plan_rng_);
          break;
      }
    } catch (const std::exception& e) {
      plan_error_ = e.what();
    }
    const double wall = seconds_since(t0);
    log_.timing.push_back({t, "plan", wall});
    event(t, "replan_launch", fmt_point(root));

    double cost = cfg_.deterministic ? cfg_.planning_charge : wall;
    // Delivery happens on a simulation step.
    cost = std::ceil(cost / cfg_.dt() - 1e-9) * cfg_.dt();
    ready_ = t + cost;
    launched_at_ = t;
    in_flight_ = true;
    if (rig) stopped_until_ = ready_;
    if (cost <= 0.0) deliver(t);
  }

  void deliver(double t) {
    in_flight_ = false;
    if (!planned_) {
      event(t, "replan_failed", plan_error_);
      return;
    }
    if (cfg_.planner == PlannerKind::rig_receding_horizon) {
      path_ = *planned_;
      latest_start_ = 0.0;
    } else {
      Path next = remaining_path(path_, hint_);
      latest_start_ = next.length();
      next.append(*planned_);
      path_ = std::move(next);
    }
    hint_ = 0.0;
    latest_len_ = planned_->length();
    log_.plans.push_back({launched_at_, t, *planned_});
    event(t, "replan_done", "length " + std::to_string(planned_->length()));
    planned_.reset();
  }

  const MissionConfig& cfg_;
  const ScalarField& field_;
  const ObstacleMap& obstacles_;
  Bounds bounds_;
  std::mt19937_64 sensor_rng_;
  std::mt19937_64 plan_rng_;
  PointSet grid_;

  MissionLog log_;
  std::unique_ptr<Mapper> mapper_;
  std::vector<Measurement> pending_;
  std::size_t total_observed_ = 0;
  double last_update_ = 0.0;

  VehicleState vehicle_;
  Path path_;
  double hint_ = 0.0;
  double latest_start_ = 0.0;
  double latest_len_ = 0.0;
  double stopped_until_ = -std::numeric_limits<double>::infinity();

  bool in_flight_ = false;
  double ready_ = 0.0;
  double launched_at_ = 0.0;
  std::optional<Path> planned_;
  std::string plan_error_;
};

void open_csv(std::ofstream& out, const std::filesystem::path& p, const char* header) {
  out.open(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << header << '\n';
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

MissionLog run_mission(const MissionConfig& config, const ScalarField& field, const ObstacleMap& obstacles) {
  config.validate();
  obstacles.validate(field.bounds());
  return MissionRunner(config, field, obstacles).run();
}

void write_mission_csv(const MissionLog& log, const std::string& dir) {
  const std::filesystem::path d(dir);
  std::filesystem::create_directories(d);
  std::ofstream out;
  open_csv(out, d / "metrics.csv", "t,rmse,entropy");
  for (const auto& m : log.metrics) out << m.t << ',' << m.rmse << ',' << m.entropy << '\n';
  out.close();
  open_csv(out, d / "trajectory.csv", "t,x,y,heading");
  for (const auto& s : log.trajectory) out << s.t << ',' << s.position.x() << ',' << s.position.y() << ',' << s.heading << '\n';
  out.close();
  open_csv(out, d / "events.csv", "t,kind,detail");
  for (const auto& e : log.events) out << e.t << ',' << csv_field(e.kind) << ',' << csv_field(e.detail) << '\n';
  out.close();
  open_csv(out, d / "timing.csv", "t,component,wall_seconds");
  for (const auto& s : log.timing) out << s.t << ',' << s.component << ',' << s.wall_seconds << '\n';
}

MetricSample metric_at(const MissionLog& log, double t) {
  MetricSample out;
  bool found = false;
  for (const auto& m : log.metrics) {
    if (m.t <= t + 1e-9) {
      out = m;
      found = true;
    }
  }
  if (!found) throw InputError("no metric sample at or before the requested time");
  return out;
}

}  // namespace oipp
