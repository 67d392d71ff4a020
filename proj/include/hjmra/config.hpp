#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hjmra/implicit_set.hpp"
#include "hjmra/scenarios.hpp"

namespace hjmra {

inline constexpr int kConfigSchemaVersion = 1;

/// Invalid run configuration. `path` names the offending field, e.g.
/// "task.targets[1].ball.radius".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::invalid_argument(path.empty() ? message : path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Region expression tree: one of ball, box, slab_box, halfspace, constant,
/// union, intersect, complement, difference, translate.
ImplicitSet region_from_json(const nlohmann::json& node, int dim, const std::string& path = "region");

/// Builds a scenario from a run configuration. Units are SI (m, s).
Scenario scenario_from_json(const nlohmann::json& config);

/// Reads and validates a configuration file. Output paths are left to the caller.
Scenario load_config(const std::filesystem::path& path);

}  // namespace hjmra
