#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/harness/config.hpp"

namespace cl {

// Writes content to path via a temp file + rename so readers never see a
// partial record.
void write_file_atomic(const std::string& path, const std::string& content);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string path;  // seed_<s>.json when ok
};

struct RunOutput {
  std::string run_dir;
  std::string record_path;
  std::vector<SeedOutcome> seeds;
  bool any_failed = false;
};

// One apply() per seed (independent seeds may run concurrently up to
// `jobs` workers); per-seed Results and an aggregate record are written
// atomically under <output_dir>/<setting>__<method>/.  Failures are
// recorded per seed rather than aborting the batch.  The CL_SEED_OVERRIDE
// environment variable replaces the config's seed list.
RunOutput run_experiment(const ExperimentConfig& config, int jobs = 1);

std::string list_settings_table();
std::string list_methods_table(const PluginRegistry& registry);
std::string list_envs_table();

}  // namespace cl
