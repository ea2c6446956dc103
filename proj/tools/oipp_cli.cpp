#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "oipp/config.hpp"
#include "oipp/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<std::string> planner;
  std::optional<std::string> mapper;
  std::optional<double> epsilon;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Mission seed");
  cmd->add_flag("--deterministic", o.deterministic, "Charge fixed simulated planning time");
  cmd->add_option("--planner", o.planner, "ours, rig_receding_horizon or random");
  cmd->add_option("--mapper", o.mapper, "exact, sgpr, svgp or ssgp");
  cmd->add_option("--epsilon", o.epsilon, "Probability of expanding toward the max-entropy point");
}

oipp::AppConfig configure(const std::string& path, const Overrides& o) {
  oipp::AppConfig cfg = oipp::load_app_config(path);
  auto& m = cfg.mission;
  if (o.seed) m.seed = *o.seed;
  if (o.deterministic) m.deterministic = true;
  try {
    if (o.planner) {
      m.planner = oipp::parse_planner(*o.planner);
      cfg.matrix.planners = {m.planner};
    }
    if (o.mapper) {
      m.mapper = oipp::parse_mapper(*o.mapper);
      cfg.matrix.mappers = {m.mapper};
    }
    if (o.epsilon) {
      m.planner_config.epsilon = *o.epsilon;
      cfg.matrix.epsilons = {*o.epsilon};
    }
    m.validate();
  } catch (const oipp::InputError& e) {
    throw oipp::ConfigError(e.what());
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online informative path planning with streaming sparse Gaussian processes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  Overrides overrides;

  auto* run = app.add_subcommand("run", "Run one mission");
  run->add_option("--config", config_path, "Configuration file")->required();
  run->add_option("--out", out_dir, "Output directory");
  add_overrides(run, overrides);

  auto* matrix = app.add_subcommand("matrix", "Run every configured combination for several trials");
  matrix->add_option("--config", config_path, "Configuration file")->required();
  matrix->add_option("--out", out_dir, "Output directory");
  add_overrides(matrix, overrides);

  std::string bench_mapper = "exact";
  std::size_t max_n = 2000;
  std::size_t step = 200;
  std::size_t cap = 1000000;
  int repeats = 1;
  std::uint64_t bench_seed = 0;
  auto* bench = app.add_subcommand("bench", "Time one hyperparameter-update cycle against dataset size");
  bench->add_option("--mapper", bench_mapper, "exact, sgpr, svgp or ssgp");
  bench->add_option("--max-n", max_n, "Largest dataset size");
  bench->add_option("--step", step, "Dataset size increment");
  bench->add_option("--cap", cap, "Inducing point cap");
  bench->add_option("--repeats", repeats, "Timed repeats per size; the median is kept");
  bench->add_option("--seed", bench_seed, "Data seed");
  bench->add_option("--out", out_dir, "Output directory");

  std::string field_out = "field.txt";
  std::optional<std::string> field_config;
  std::uint64_t field_seed = 1;
  auto* gen = app.add_subcommand("gen-field", "Write a synthetic field file");
  gen->add_option("--out", field_out, "Field file to write");
  gen->add_option("--seed", field_seed, "Field seed");
  gen->add_option("--config", field_config, "Configuration file with a [world] section");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  oipp::AppConfig cfg;
  try {
    if (*run || *matrix) cfg = configure(config_path, overrides);
    if (*gen && field_config) cfg = oipp::load_app_config(*field_config);
    if (*bench) {
      (void)oipp::parse_mapper(bench_mapper);
      if (step < 1 || max_n < 2 * step) throw oipp::ConfigError("bench: --max-n must be at least twice --step");
    }
  } catch (const oipp::InputError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*run) {
      const auto scenario = oipp::build_scenario(cfg.world);
      const auto s = oipp::run_single(cfg.mission, scenario, out_dir);
      std::cout << "final_rmse " << s.final_rmse << "\nmean_entropy " << s.final_entropy << "\npath_length "
                << s.path_length << "\ngp_compute_seconds " << s.gp_compute_seconds << '\n';
      return 0;
    }
    if (*matrix) {
      const auto scenario = oipp::build_scenario(cfg.world);
      const auto rows = oipp::run_matrix(cfg, scenario, out_dir);
      int status = 0;
      for (const auto& r : rows) {
        std::cout << oipp::to_string(r.planner) << ' ' << oipp::to_string(r.mapper) << " eps " << r.epsilon
                  << ": rmse " << r.rmse.mean << " +- " << r.rmse.std << ", entropy " << r.entropy.mean << " +- "
                  << r.entropy.std << ", path " << r.path_length.mean << " +- " << r.path_length.std
                  << ", failed " << r.failed << '/' << r.trials << '\n';
        if (r.failed == r.trials) status = kRuntimeError;
      }
      return status;
    }
    if (*bench) {
      const auto result = oipp::bench_scaling(oipp::parse_mapper(bench_mapper), max_n, step, bench_seed, cap, repeats);
      std::filesystem::create_directories(out_dir);
      const auto base = std::filesystem::path(out_dir) / ("bench_" + bench_mapper);
      oipp::write_bench(base.string() + ".csv", result);
      std::ofstream(base.string() + "_slope.txt") << result.slope << '\n';
      for (const auto& r : result.rows) std::cout << r.n << ' ' << r.wall_seconds << ' ' << r.m << '\n';
      std::cout << "slope " << result.slope << '\n';
      return 0;
    }
    if (*gen) {
      oipp::save_field(field_out, oipp::generate_synthetic_field(field_seed, cfg.world.synthetic));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
