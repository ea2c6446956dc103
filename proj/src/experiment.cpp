#include "oipp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "oipp/gp_exact.hpp"
#include "oipp/gp_sparse.hpp"
#include "oipp/gp_streaming.hpp"

namespace oipp {

RunSummary summarize(const MissionLog& log) {
  RunSummary s;
  if (!log.metrics.empty()) {
    s.final_rmse = log.metrics.back().rmse;
    s.final_entropy = log.metrics.back().entropy;
  }
  s.path_length = log.path_length;
  s.gp_compute_seconds = log.gp_compute_seconds;
  s.measurements = log.measurements.size();
  return s;
}

void write_summary(const std::string& path, const RunSummary& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "final_rmse " << s.final_rmse << '\n'
      << "mean_entropy " << s.final_entropy << '\n'
      << "path_length " << s.path_length << '\n'
      << "gp_compute_seconds " << s.gp_compute_seconds << '\n'
      << "measurements " << s.measurements << '\n';
}

RunSummary read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open summary: " + path);
  RunSummary s;
  std::string key;
  while (in >> key) {
    if (key == "final_rmse") in >> s.final_rmse;
    else if (key == "mean_entropy") in >> s.final_entropy;
    else if (key == "path_length") in >> s.path_length;
    else if (key == "gp_compute_seconds") in >> s.gp_compute_seconds;
    else if (key == "measurements") in >> s.measurements;
    else throw InputError("summary: unknown key " + key);
  }
  return s;
}

RunSummary run_single(const MissionConfig& mission, const Scenario& scenario, const std::string& out_dir) {
  const MissionLog log = run_mission(mission, scenario.field, scenario.obstacles);
  write_mission_csv(log, out_dir);
  const RunSummary s = summarize(log);
  write_summary((std::filesystem::path(out_dir) / "summary.txt").string(), s);
  return s;
}

Aggregate aggregate(const std::vector<double>& v) {
  Aggregate a;
  if (v.empty()) return a;
  double sum = 0.0;
  for (double x : v) sum += x;
  a.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return a;
}

namespace {

std::string combo_name(PlannerKind p, MapperKind m, double eps) {
  std::ostringstream s;
  s << to_string(p) << '_' << to_string(m) << "_eps" << eps;
  return s.str();
}

}  // namespace

std::vector<MatrixRow> run_matrix(const AppConfig& config, const Scenario& scenario, const std::string& out_dir) {
  std::vector<MatrixRow> rows;
  for (PlannerKind p : config.matrix.planners) {
    for (MapperKind m : config.matrix.mappers) {
      for (double eps : config.matrix.epsilons) {
        MatrixRow row;
        row.planner = p;
        row.mapper = m;
        row.epsilon = eps;
        row.trials = config.matrix.trials;
        std::vector<double> rmse, ent, len, comp;
        const auto dir = std::filesystem::path(out_dir) / combo_name(p, m, eps);
        for (int k = 0; k < config.matrix.trials; ++k) {
          MissionConfig mc = config.mission;
          mc.planner = p;
          mc.mapper = m;
          mc.planner_config.epsilon = eps;
          mc.seed = config.mission.seed + static_cast<std::uint64_t>(k);
          const auto trial_dir = (dir / ("trial_" + std::to_string(k))).string();
          try {
            const RunSummary s = run_single(mc, scenario, trial_dir);
            rmse.push_back(s.final_rmse);
            ent.push_back(s.final_entropy);
            len.push_back(s.path_length);
            comp.push_back(s.gp_compute_seconds);
          } catch (const std::exception& e) {
            ++row.failed;
            std::filesystem::create_directories(trial_dir);
            std::ofstream(std::filesystem::path(trial_dir) / "error.txt") << e.what() << '\n';
          }
        }
        row.rmse = aggregate(rmse);
        row.entropy = aggregate(ent);
        row.path_length = aggregate(len);
        row.compute_seconds = aggregate(comp);
        rows.push_back(row);
      }
    }
  }
  std::filesystem::create_directories(out_dir);
  write_table((std::filesystem::path(out_dir) / "table.csv").string(), rows);
  return rows;
}

void write_table(const std::string& path, const std::vector<MatrixRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "planner,mapper,epsilon,trials,failed,rmse_mean,rmse_std,entropy_mean,entropy_std,"
         "path_length_mean,path_length_std,compute_seconds_mean,compute_seconds_std\n";
  for (const auto& r : rows) {
    out << to_string(r.planner) << ',' << to_string(r.mapper) << ',' << r.epsilon << ',' << r.trials << ','
        << r.failed << ',' << r.rmse.mean << ',' << r.rmse.std << ',' << r.entropy.mean << ',' << r.entropy.std
        << ',' << r.path_length.mean << ',' << r.path_length.std << ',' << r.compute_seconds.mean << ','
        << r.compute_seconds.std << '\n';
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("loglog_slope needs at least two matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("loglog_slope needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

using Clock = std::chrono::steady_clock;

DataBatch synthetic_stream(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  DataBatch d;
  d.inputs.resize(static_cast<Eigen::Index>(n), 2);
  d.targets.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double x = u(rng);
    const double y = u(rng);
    d.inputs.row(i) << x, y;
    d.targets(i) = std::sin(0.06 * x) * std::cos(0.04 * y) + 0.5 * std::sin(0.03 * (x + y)) + noise(rng);
  }
  return d;
}

std::size_t fifteen_percent(std::size_t n, std::size_t cap) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(0.15 * static_cast<double>(n) - 1e-9)), 1,
                                 std::min(cap, n));
}

template <typename F>
double time_median(int repeats, F&& f) {
  std::vector<double> t;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    t.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace

BenchResult bench_scaling(MapperKind kind, std::size_t max_n, std::size_t step, std::uint64_t seed,
                          std::size_t inducing_cap, int repeats) {
  if (step < 1 || max_n < 2 * step) throw InputError("bench needs max_n >= 2 * step >= 2");
  if (repeats < 1) throw InputError("bench needs at least one repeat");
  constexpr std::size_t batch = 50;
  const Hyperparameters hyper = Hyperparameters::from_natural(14.0, 1.0, 0.01);
  BenchResult out;
  std::mt19937_64 rng(seed);
  for (std::size_t n = step; n <= max_n; n += step) {
    const DataBatch data = synthetic_stream(n, rng);
    BenchRow row;
    row.n = n;
    switch (kind) {
      case MapperKind::exact: {
        row.wall_seconds = time_median(repeats, [&] {
          const ExactGPState s(data, hyper);
          volatile double v = log_marginal_likelihood(s) + lml_gradient(s).sum();
          (void)v;
        });
        break;
      }
      case MapperKind::sgpr: {
        row.m = fifteen_percent(n, inducing_cap);
        const PointSet z = gather_rows(data.inputs, pivoted_cholesky_select(data.inputs, row.m, hyper));
        row.wall_seconds = time_median(repeats, [&] {
          volatile double v = collapsed_elbo(data, z, hyper) + collapsed_elbo_gradient(data, z, hyper).sum();
          (void)v;
        });
        break;
      }
      case MapperKind::svgp: {
        row.m = fifteen_percent(n, inducing_cap);
        const PointSet z = gather_rows(data.inputs, pivoted_cholesky_select(data.inputs, row.m, hyper));
        const SparseGPState state(z, sgpr_optimal_variational(data, z, hyper), hyper);
        const std::size_t b = std::min<std::size_t>(64, n);
        const DataBatch mb{data.inputs.topRows(static_cast<Eigen::Index>(b)),
                           data.targets.head(static_cast<Eigen::Index>(b))};
        row.wall_seconds = time_median(repeats, [&] {
          volatile double v = svgp_elbo_gradient(mb, state, n).value;
          (void)v;
        });
        break;
      }
      case MapperKind::ssgp: {
        const std::size_t seen = n > batch ? n - batch : 0;
        StreamingConfig cfg;
        cfg.inducing_cap = inducing_cap;
        cfg.optimizer.max_iterations = 1;
        cfg.optimizer.relative_tolerance = 0.0;
        StreamingGPState state(hyper);
        if (seen > 0) {
          const DataBatch old{data.inputs.topRows(static_cast<Eigen::Index>(seen)),
                              data.targets.head(static_cast<Eigen::Index>(seen))};
          const std::size_t m_old = fifteen_percent(seen, inducing_cap);
          const PointSet z = gather_rows(old.inputs, pivoted_cholesky_select(old.inputs, m_old, hyper));
          state = restore_streaming_state(hyper, SparseGPState(z, sgpr_optimal_variational(old, z, hyper), hyper),
                                          std::nullopt, seen);
        }
        const DataBatch fresh{data.inputs.bottomRows(static_cast<Eigen::Index>(n - seen)),
                              data.targets.tail(static_cast<Eigen::Index>(n - seen))};
        StreamingGPState next = state;
        row.wall_seconds = time_median(repeats, [&] { next = ssgp_update(state, fresh, cfg); });
        row.m = next.inducing_count();
        break;
      }
    }
    out.rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    xs.push_back(static_cast<double>(r.n));
    ys.push_back(r.wall_seconds);
  }
  out.slope = loglog_slope(xs, ys);
  return out;
}

void write_bench(const std::string& path, const BenchResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "n,wall_seconds,m\n";
  for (const auto& r : result.rows) out << r.n << ',' << r.wall_seconds << ',' << r.m << '\n';
}

}  // namespace oipp
