#pragma once

#include <map>
#include <string>

#include "branchsim/model.hpp"

#include "json.hpp"

namespace branchsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownPreset : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Scenario { FiniteMean, CaseA, CaseB1, CaseB2, RenewalOnly, Custom };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct ExperimentConfig {
  ModelSpec model;
  Scenario scenario = Scenario::Custom;
  std::vector<double> t_grid;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 0;
  double window_L = 1.0;
  double ball_radius = 1.0;
  std::string output_dir = "out";
  std::map<std::string, double> tolerances;  // named overrides
};

inline constexpr int kConfigSchemaVersion = 1;

/// Strict parse: the schema version must match and unknown keys anywhere in
/// the document are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

nlohmann::json serialize_config(const ExperimentConfig& config);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace branchsim
