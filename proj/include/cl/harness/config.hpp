#pragma once
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/envsim/environment.hpp"
#include "cl/evaluation.hpp"
#include "cl/harness/plugin.hpp"

namespace cl {

struct ExperimentConfig {
  std::string setting;
  std::string method;
  std::map<std::string, double> hyperparameters;  // fully resolved
  EnvironmentSpec env;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "runs";
  std::vector<std::string> plugins;  // manifest paths
};

// Parses and fully validates: known setting and method, applicability
// (failing axis named), environment compatible with the setting, seeds
// non-empty and distinct.  Defaults are filled per the setting's branch
// and echoed explicitly on serialization.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct ResolvedExperiment {
  SettingInstance instance;
  MethodDescriptor descriptor;
  bool is_plugin = false;
  PluginManifest plugin;
  std::map<std::string, double> hyperparameters;
};

ResolvedExperiment resolve_experiment(const ExperimentConfig& config);

std::string run_name(const ExperimentConfig& config);

}  // namespace cl
