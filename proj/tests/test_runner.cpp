#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cl/harness/runner.hpp"

using namespace cl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() /
             ("cl_runner_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

ExperimentConfig small_config(const std::string& out) {
  ExperimentConfig config = parse_config(R"({
    "setting": "incremental_sl",
    "method": "base",
    "environment": {"family": "synthetic_gaussian", "num_tasks": 2,
                     "steps_per_phase": 60, "disjoint_actions": true,
                     "feature_dim": 8},
    "seeds": [1, 2, 3]
  })");
  config.output_dir = out;
  return config;
}

nlohmann::json strip_wall_time(nlohmann::json j) {
  j.erase("wall_time_seconds");
  return j;
}

}  // namespace

TEST_CASE("run writes one result per seed plus an aggregate record") {
  auto dir = temp_dir("basic");
  auto output = run_experiment(small_config(dir.string()), 1);
  CHECK_FALSE(output.any_failed);
  CHECK(output.seeds.size() == 3);
  for (const auto& seed : output.seeds) {
    CHECK(seed.ok);
    CHECK(fs::exists(seed.path));
  }
  auto record = read_json(output.record_path);
  CHECK(record.at("run_id") == "incremental_sl__base");
  CHECK(record.at("per_seed").size() == 3);
  CHECK(record.at("aggregates").at("final_performance").at("n") == 3);
  // aggregates recomputable from the per-seed scalars
  double mean = 0.0;
  for (const auto& entry : record.at("per_seed")) {
    mean += entry.at("scalars").at("final_performance").get<double>();
  }
  mean /= 3.0;
  CHECK(record.at("aggregates").at("final_performance").at("mean").get<double>() ==
        doctest::Approx(mean).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("reruns are bit-identical apart from wall time") {
  auto dir_a = temp_dir("rerun_a");
  auto dir_b = temp_dir("rerun_b");
  run_experiment(small_config(dir_a.string()), 1);
  run_experiment(small_config(dir_b.string()), 2);  // jobs must not matter
  for (int seed : {1, 2, 3}) {
    auto a = read_json(dir_a / "incremental_sl__base" /
                       ("seed_" + std::to_string(seed) + ".json"));
    auto b = read_json(dir_b / "incremental_sl__base" /
                       ("seed_" + std::to_string(seed) + ".json"));
    CHECK(strip_wall_time(a) == strip_wall_time(b));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("failures are recorded per seed without aborting the batch") {
  auto dir = temp_dir("fail");
  auto config = small_config(dir.string());
  // a method that cannot act in this configuration: multihead forced on
  // without observed ids or inference fails at evaluation time
  config.hyperparameters["multihead"] = 1.0;
  auto output = run_experiment(config, 1);
  CHECK(output.any_failed);
  auto record = read_json(output.record_path);
  int errors = 0;
  for (const auto& entry : record.at("per_seed")) {
    if (entry.contains("error")) ++errors;
  }
  CHECK(errors == 3);
  fs::remove_all(dir);
}

TEST_CASE("seed override narrows the batch") {
  auto dir = temp_dir("override");
  setenv("CL_SEED_OVERRIDE", "42", 1);
  auto output = run_experiment(small_config(dir.string()), 1);
  unsetenv("CL_SEED_OVERRIDE");
  CHECK(output.seeds.size() == 1);
  CHECK(output.seeds[0].seed == 42);
  fs::remove_all(dir);
}

TEST_CASE("atomic writes leave only temp files on a crash") {
  auto dir = temp_dir("crash");
  const std::string config_path = (dir / "config.json").string();
  {
    std::ofstream out(config_path);
    out << config_to_json(small_config((dir / "runs").string())).dump();
  }
  std::ostringstream cmd;
  cmd << "CL_TEST_CRASH_BEFORE_RENAME=1 CL_SEED_OVERRIDE=1 " << CL_BIN_PATH
      << " run --config " << config_path << " >/dev/null 2>&1";
  const int rc = std::system(cmd.str().c_str());
  CHECK(rc != 0);  // the child aborted
  bool found_final = false;
  bool found_tmp = false;
  if (fs::exists(dir / "runs")) {
    for (const auto& entry : fs::recursive_directory_iterator(dir / "runs")) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (name.size() > 4 && name.substr(name.size() - 4) == ".tmp") {
        found_tmp = true;
      } else {
        found_final = true;
      }
    }
  }
  CHECK(found_tmp);
  CHECK_FALSE(found_final);
  fs::remove_all(dir);
}

TEST_CASE("listing tables cover the catalog") {
  const std::string settings = list_settings_table();
  int rows = 0;
  for (const auto& node : canonical_catalog()) {
    if (node.assumptions.is_abstract()) continue;
    ++rows;
    CHECK(settings.find(node.name) != std::string::npos);
  }
  CHECK(rows == 12);
  PluginRegistry registry;
  const std::string methods = list_methods_table(registry);
  CHECK(methods.find("base") != std::string::npos);
  CHECK(methods.find("12 settings") != std::string::npos);
  const std::string envs = list_envs_table();
  CHECK(envs.find("cartpole") != std::string::npos);
  CHECK(envs.find("passive") != std::string::npos);
}
