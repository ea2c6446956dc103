#include "oipp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace oipp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const ConfigEntry& e) {
  return "[" + section + "] " + e.key + " (line " + std::to_string(e.line) + ")";
}

double to_double(const std::string& section, const ConfigEntry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(where(section, e) + ": expected a number, got '" + e.value + "'");
  return v;
}

long long to_integer(const std::string& section, const ConfigEntry& e) {
  long long v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(where(section, e) + ": expected an integer, got '" + e.value + "'");
  return v;
}

bool to_bool(const std::string& section, const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(where(section, e) + ": expected true or false, got '" + e.value + "'");
}

std::vector<double> to_numbers(const std::string& section, const ConfigEntry& e, std::size_t count) {
  std::istringstream ss(e.value);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    ConfigEntry part{e.key, tok, e.line};
    out.push_back(to_double(section, part));
  }
  if (out.size() != count) {
    throw ConfigError(where(section, e) + ": expected " + std::to_string(count) + " numbers");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Handler = std::function<void(const ConfigEntry&)>;

void apply(const ConfigFile& file, const std::string& section, const std::map<std::string, Handler>& handlers) {
  if (!file.has_section(section)) return;
  for (const auto& e : file.section(section)) {
    const auto it = handlers.find(e.key);
    if (it == handlers.end()) throw ConfigError(where(section, e) + ": unknown field");
    try {
      it->second(e);
    } catch (const ConfigError&) {
      throw;
    } catch (const InputError& err) {
      throw ConfigError(where(section, e) + ": " + err.what());
    }
  }
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile out;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
      out.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    if (current.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": entry outside a section");
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.sections_[current].push_back(std::move(e));
  }
  return out;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::vector<ConfigEntry>& ConfigFile::section(const std::string& name) const {
  static const std::vector<ConfigEntry> empty;
  const auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

std::vector<std::string> ConfigFile::section_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : sections_) out.push_back(k);
  return out;
}

AppConfig read_app_config(const ConfigFile& file) {
  for (const auto& name : file.section_names()) {
    if (name != "mission" && name != "planner" && name != "mapper" && name != "world" && name != "matrix") {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  AppConfig cfg;
  auto& m = cfg.mission;
  auto& p = m.planner_config;
  auto& mp = m.mapper_config;
  auto& w = cfg.world;
  m.deterministic = false;
  bool have_budget = false;
  const std::string ms = "mission", ps = "planner", mps = "mapper", ws = "world", xs = "matrix";

  apply(file, ms, {
      {"budget", [&](const ConfigEntry& e) { m.budget = to_double(ms, e); have_budget = true; }},
      {"update_period", [&](const ConfigEntry& e) { m.update_period = to_double(ms, e); }},
      {"sensor_rate", [&](const ConfigEntry& e) { m.sensor_rate = to_double(ms, e); }},
      {"sensor_noise", [&](const ConfigEntry& e) { m.sensor_noise = to_double(ms, e); }},
      {"speed", [&](const ConfigEntry& e) { m.surge_speed = to_double(ms, e); }},
      {"turn_rate_limit", [&](const ConfigEntry& e) { m.turn_rate_limit = to_double(ms, e); }},
      {"lookahead", [&](const ConfigEntry& e) { m.lookahead = to_double(ms, e); }},
      {"replan_trigger", [&](const ConfigEntry& e) { m.replan_trigger = to_double(ms, e); }},
      {"bootstrap_fraction", [&](const ConfigEntry& e) { m.bootstrap_fraction = to_double(ms, e); }},
      {"planner", [&](const ConfigEntry& e) { m.planner = parse_planner(e.value); }},
      {"mapper", [&](const ConfigEntry& e) { m.mapper = parse_mapper(e.value); }},
      {"seed", [&](const ConfigEntry& e) { m.seed = static_cast<std::uint64_t>(to_integer(ms, e)); }},
      {"deterministic", [&](const ConfigEntry& e) { m.deterministic = to_bool(ms, e); }},
      {"planning_charge", [&](const ConfigEntry& e) { m.planning_charge = to_double(ms, e); }},
      {"metric_grid", [&](const ConfigEntry& e) { m.metric_grid = static_cast<int>(to_integer(ms, e)); }},
  });
  if (!have_budget) throw ConfigError("missing required field [mission] budget");

  apply(file, ps, {
      {"epsilon", [&](const ConfigEntry& e) { p.epsilon = to_double(ps, e); }},
      {"radius", [&](const ConfigEntry& e) { p.radius = to_double(ps, e); }},
      {"max_nodes", [&](const ConfigEntry& e) { p.max_nodes = static_cast<int>(to_integer(ps, e)); }},
      {"steer_step", [&](const ConfigEntry& e) { p.steer_step = to_double(ps, e); }},
      {"rewire_radius", [&](const ConfigEntry& e) { p.rewire_radius = to_double(ps, e); }},
      {"entropy_candidates", [&](const ConfigEntry& e) { p.entropy_candidates = static_cast<int>(to_integer(ps, e)); }},
      {"refine_steps", [&](const ConfigEntry& e) { p.refine_steps = static_cast<int>(to_integer(ps, e)); }},
      {"inflation", [&](const ConfigEntry& e) { p.inflation = to_double(ps, e); }},
      {"boundary_margin", [&](const ConfigEntry& e) { p.boundary_margin = to_double(ps, e); }},
  });

  apply(file, mps, {
      {"iterations", [&](const ConfigEntry& e) { mp.iterations = static_cast<int>(to_integer(mps, e)); }},
      {"inducing_fraction", [&](const ConfigEntry& e) { mp.inducing_fraction = to_double(mps, e); }},
      {"inducing_cap", [&](const ConfigEntry& e) { mp.inducing_cap = static_cast<std::size_t>(to_integer(mps, e)); }},
      {"minibatch", [&](const ConfigEntry& e) { mp.minibatch = static_cast<std::size_t>(to_integer(mps, e)); }},
      {"svgp_learning_rate", [&](const ConfigEntry& e) { mp.svgp_learning_rate = to_double(mps, e); }},
  });

  bool listed_obstacle = false;
  apply(file, ws, {
      {"field", [&](const ConfigEntry& e) { w.field_path = e.value; }},
      {"seed", [&](const ConfigEntry& e) { w.field_seed = static_cast<std::uint64_t>(to_integer(ws, e)); }},
      {"bounds", [&](const ConfigEntry& e) {
         const auto v = to_numbers(ws, e, 4);
         w.synthetic.bounds = Bounds{v[0], v[1], v[2], v[3]};
       }},
      {"grid", [&](const ConfigEntry& e) {
         const auto v = to_numbers(ws, e, 2);
         w.synthetic.nx = static_cast<int>(v[0]);
         w.synthetic.ny = static_cast<int>(v[1]);
       }},
      {"bumps", [&](const ConfigEntry& e) { w.synthetic.bumps = static_cast<int>(to_integer(ws, e)); }},
      {"smoothness", [&](const ConfigEntry& e) { w.synthetic.smoothness = to_double(ws, e); }},
      {"default_obstacles", [&](const ConfigEntry& e) { w.default_obstacles = to_bool(ws, e); }},
      {"rect", [&](const ConfigEntry& e) {
         const auto v = to_numbers(ws, e, 4);
         w.rectangles.push_back({Point(v[0], v[1]), Point(v[2], v[3])});
         listed_obstacle = true;
       }},
      {"circle", [&](const ConfigEntry& e) {
         const auto v = to_numbers(ws, e, 3);
         w.circles.push_back({Point(v[0], v[1]), v[2]});
         listed_obstacle = true;
       }},
  });
  if (listed_obstacle) w.default_obstacles = false;

  auto& x = cfg.matrix;
  apply(file, xs, {
      {"trials", [&](const ConfigEntry& e) { x.trials = static_cast<int>(to_integer(xs, e)); }},
      {"planners", [&](const ConfigEntry& e) {
         x.planners.clear();
         for (const auto& s : split_list(e.value)) x.planners.push_back(parse_planner(s));
       }},
      {"mappers", [&](const ConfigEntry& e) {
         x.mappers.clear();
         for (const auto& s : split_list(e.value)) x.mappers.push_back(parse_mapper(s));
       }},
      {"epsilons", [&](const ConfigEntry& e) {
         x.epsilons.clear();
         for (const auto& s : split_list(e.value)) x.epsilons.push_back(to_double(xs, ConfigEntry{e.key, s, e.line}));
       }},
  });
  if (x.trials < 1) throw ConfigError("[matrix] trials must be at least 1");
  if (x.planners.empty() || x.mappers.empty() || x.epsilons.empty()) {
    throw ConfigError("[matrix] planners, mappers and epsilons must be non-empty");
  }

  try {
    m.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

AppConfig load_app_config(const std::string& path) { return read_app_config(ConfigFile::load(path)); }

ObstacleMap default_obstacle_layout(const Bounds& b) {
  auto at = [&](double fx, double fy) { return Point(b.xmin + fx * b.width(), b.ymin + fy * b.height()); };
  const double s = std::min(b.width(), b.height());
  std::vector<Rectangle> rects{{at(0.30, 0.55), at(0.45, 0.70)}, {at(0.65, 0.15), at(0.80, 0.30)}};
  std::vector<Circle> circles{{at(0.70, 0.70), 0.08 * s}, {at(0.25, 0.25), 0.06 * s}};
  return ObstacleMap(std::move(rects), std::move(circles));
}

Scenario build_scenario(const WorldConfig& world) {
  ScalarField field = world.field_path.empty() ? generate_synthetic_field(world.field_seed, world.synthetic)
                                                : load_field(world.field_path);
  ObstacleMap obstacles = world.default_obstacles ? default_obstacle_layout(field.bounds())
                                                  : ObstacleMap(world.rectangles, world.circles);
  obstacles.validate(field.bounds());
  return Scenario{std::move(field), std::move(obstacles)};
}

}  // namespace oipp
