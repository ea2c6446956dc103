#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oipp/mission.hpp"
#include "oipp/world.hpp"

namespace oipp {

/// Configuration problem; the message names the offending field.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parsed `key = value` text with `[section]` headers. Keys may repeat.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  [[nodiscard]] const std::vector<ConfigEntry>& section(const std::string& name) const;
  [[nodiscard]] bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
  [[nodiscard]] std::vector<std::string> section_names() const;

 private:
  std::map<std::string, std::vector<ConfigEntry>> sections_;
};

struct WorldConfig {
  /// Field file; when empty a synthetic field is generated.
  std::string field_path;
  std::uint64_t field_seed = 1;
  SyntheticFieldSpec synthetic;
  std::vector<Rectangle> rectangles;
  std::vector<Circle> circles;
  /// Use the built-in obstacle layout when no rect or circle is given.
  bool default_obstacles = true;
};

struct MatrixConfig {
  int trials = 10;
  std::vector<PlannerKind> planners{PlannerKind::ours};
  std::vector<MapperKind> mappers{MapperKind::ssgp};
  std::vector<double> epsilons{0.1};
};

struct AppConfig {
  MissionConfig mission;
  WorldConfig world;
  MatrixConfig matrix;
};

/// Builds the application configuration. [mission] budget is required.
AppConfig read_app_config(const ConfigFile& file);
AppConfig load_app_config(const std::string& path);

struct Scenario {
  ScalarField field;
  ObstacleMap obstacles;
};

/// Obstacles used when the configuration lists none, scaled to the bounds.
ObstacleMap default_obstacle_layout(const Bounds& bounds);

Scenario build_scenario(const WorldConfig& world);

}  // namespace oipp
