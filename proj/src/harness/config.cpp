#include "cl/harness/config.hpp"

#include <algorithm>
#include <set>

#include "cl/errors.hpp"

namespace cl {

namespace {

ScheduleKind default_schedule_for(const SettingNode& node) {
  if (node.assumptions.stationarity == Stationarity::Stationary) {
    return node.assumptions.context_observed == ContextObserved::Observed
               ? ScheduleKind::StationaryMixture
               : ScheduleKind::SingleTask;
  }
  if (node.assumptions.context_continuity == ContextContinuity::Continuous) {
    return ScheduleKind::ContinuousDrift;
  }
  if (node.assumptions.boundary_signal == BoundarySignal::Hidden) {
    return ScheduleKind::DiscreteChain;
  }
  return ScheduleKind::IncrementalSequence;
}

}  // namespace

ExperimentConfig parse_config_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "config must be a JSON object");
  }
  ExperimentConfig config;
  try {
    config.setting = j.at("setting").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "config needs a 'setting' string");
  }
  const SettingNode& node = setting_or_throw(config.setting);
  if (node.assumptions.is_abstract()) {
    throw ConfigError(ConfigError::Code::NotApplicable,
                      "setting '" + config.setting +
                          "' is abstract and not runnable; pick one of its "
                          "_sl/_rl variants");
  }

  // method: either a name or {name, hyperparameters}
  std::map<std::string, double> overrides;
  if (!j.contains("method")) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "config needs a 'method'");
  }
  if (j.at("method").is_string()) {
    config.method = j.at("method").get<std::string>();
  } else if (j.at("method").is_object()) {
    try {
      config.method = j.at("method").at("name").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        "method object needs a 'name'");
    }
    if (j.at("method").contains("hyperparameters")) {
      try {
        overrides = j.at("method")
                        .at("hyperparameters")
                        .get<std::map<std::string, double>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError(ConfigError::Code::MalformedField,
                          "hyperparameters must map names to numbers");
      }
    }
  } else {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "'method' must be a string or an object");
  }

  // environment defaults depend on the setting
  nlohmann::json env_j =
      j.contains("environment") ? j.at("environment") : nlohmann::json::object();
  if (j.contains("family") && !env_j.contains("family")) {
    env_j["family"] = j.at("family");  // shorthand
  }
  const bool active = node.assumptions.branch == Branch::Active;
  if (!env_j.contains("family")) {
    env_j["family"] = active ? "cartpole" : "synthetic_gaussian";
  }
  if (!env_j.contains("schedule")) {
    env_j["schedule"] = schedule_kind_to_string(default_schedule_for(node));
  }
  if (!env_j.contains("num_tasks")) {
    env_j["num_tasks"] =
        schedule_kind_from_string(env_j.at("schedule").get<std::string>()) ==
                ScheduleKind::SingleTask
            ? 1
            : 5;
  }
  if (!env_j.contains("steps_per_phase")) {
    env_j["steps_per_phase"] = active ? 5000 : 200;
  }
  try {
    from_json(env_j, config.env);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      std::string("bad environment field: ") + e.what());
  }
  const Branch env_branch = family_branch(config.env.family);
  if (env_branch != node.assumptions.branch) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "family '" + family_to_string(config.env.family) +
                          "' is on the wrong branch for setting '" +
                          config.setting + "'");
  }

  if (j.contains("seeds")) {
    try {
      config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        "seeds must be an array of nonnegative integers");
    }
  }
  if (config.seeds.empty()) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "seeds must be non-empty");
  }
  std::set<std::uint64_t> distinct(config.seeds.begin(), config.seeds.end());
  if (distinct.size() != config.seeds.size()) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "seeds must be distinct");
  }
  config.output_dir = j.value("output_dir", std::string("runs"));
  if (j.contains("plugins")) {
    config.plugins = j.at("plugins").get<std::vector<std::string>>();
  }

  // resolve the method against builtins/plugins, echoing the full
  // hyperparameter set for builtins
  PluginRegistry registry;
  for (const auto& path : config.plugins) registry.add_from_file(path);
  if (find_builtin_method(config.method)) {
    config.hyperparameters =
        make_builtin_descriptor(config.method, overrides).hyperparameters;
  } else if (registry.find(config.method)) {
    config.hyperparameters = overrides;
  } else {
    throw ConfigError(ConfigError::Code::UnknownMethod,
                      "unknown method: " + config.method);
  }

  // full validation: applicability plus a dry environment construction
  ResolvedExperiment resolved = resolve_experiment(config);
  auto handle = FamilyHandle::load(config.env, config.seeds[0]);
  auto schedule = make_schedule_for(*handle, config.seeds[0]);
  wrap_for_setting(
      make_base_environment(handle, schedule, 1, EnvRole::Train),
      resolved.instance.node.assumptions);
  return config;
}

ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json env;
  to_json(env, config.env);
  return nlohmann::json{
      {"setting", config.setting},
      {"method",
       {{"name", config.method}, {"hyperparameters", config.hyperparameters}}},
      {"environment", env},
      {"seeds", config.seeds},
      {"output_dir", config.output_dir},
      {"plugins", config.plugins}};
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& config) {
  ResolvedExperiment resolved;
  resolved.instance.node = setting_or_throw(config.setting);
  resolved.instance.env = config.env;
  resolved.hyperparameters = config.hyperparameters;
  if (find_builtin_method(config.method)) {
    resolved.descriptor =
        make_builtin_descriptor(config.method, config.hyperparameters);
  } else {
    PluginRegistry registry;
    for (const auto& path : config.plugins) registry.add_from_file(path);
    const PluginManifest* manifest = registry.find(config.method);
    if (!manifest) {
      throw ConfigError(ConfigError::Code::UnknownMethod,
                        "unknown method: " + config.method);
    }
    resolved.is_plugin = true;
    resolved.plugin = *manifest;
    resolved.descriptor =
        plugin_descriptor(*manifest, config.hyperparameters);
  }
  if (!is_applicable(resolved.descriptor,
                     resolved.instance.node.assumptions)) {
    throw ConfigError(
        ConfigError::Code::NotApplicable,
        "method '" + config.method + "' does not apply to setting '" +
            config.setting + "': failing axis " +
            failing_axis(resolved.descriptor.target,
                         resolved.instance.node.assumptions));
  }
  return resolved;
}

std::string run_name(const ExperimentConfig& config) {
  return config.setting + "__" + config.method;
}

}  // namespace cl
