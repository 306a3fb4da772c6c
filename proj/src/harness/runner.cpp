#include "cl/harness/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "cl/errors.hpp"
#include "cl/version.hpp"

namespace cl {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw RunError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw RunError("short write to " + tmp);
  }
  if (std::getenv("CL_TEST_CRASH_BEFORE_RENAME")) {
    // test hook: die between the temp write and the rename
    std::abort();
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RunError("rename " + tmp + " -> " + path + ": " + ec.message());
}

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct Accumulator {
  double sum = 0.0, sq = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stddev() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sq / n - m * m));
  }
};

}  // namespace

RunOutput run_experiment(const ExperimentConfig& config, int jobs) {
  ResolvedExperiment resolved = resolve_experiment(config);
  std::vector<std::uint64_t> seeds = config.seeds;
  if (const char* override_seed = std::getenv("CL_SEED_OVERRIDE")) {
    seeds = {std::strtoull(override_seed, nullptr, 10)};
  }

  RunOutput output;
  output.run_dir =
      (std::filesystem::path(config.output_dir) / run_name(config)).string();
  std::filesystem::create_directories(output.run_dir);

  const nlohmann::json config_echo = config_to_json(config);
  std::vector<SeedOutcome> outcomes(seeds.size());
  std::vector<nlohmann::json> result_jsons(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      SeedOutcome outcome;
      outcome.seed = seeds[i];
      try {
        MethodFactory factory;
        if (resolved.is_plugin) {
          const PluginManifest manifest = resolved.plugin;
          const auto hyper = resolved.hyperparameters;
          factory = [manifest, hyper](const SettingContext& ctx) {
            return std::make_unique<PluginMethod>(manifest, ctx, hyper);
          };
        } else {
          const MethodDescriptor desc = resolved.descriptor;
          factory = [desc](const SettingContext& ctx) {
            return std::make_unique<MethodInstance>(
                MethodInstance::configure(desc, ctx));
          };
        }
        Results results = apply_with_factory(
            resolved.instance, resolved.descriptor, factory, seeds[i],
            config_echo);
        const std::string path =
            (std::filesystem::path(output.run_dir) /
             ("seed_" + std::to_string(seeds[i]) + ".json"))
                .string();
        {
          std::lock_guard<std::mutex> lock(io_mutex);
          write_file_atomic(path, results_to_json(results).dump(2) + "\n");
        }
        outcome.ok = true;
        outcome.path = path;
        result_jsons[i] = results_to_json(results);
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
      outcomes[i] = std::move(outcome);
    }
  };

  const int workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Accumulator final_acc, bwt_acc, fwt_acc, online_acc, wall_acc;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const SeedOutcome& outcome = outcomes[i];
    if (!outcome.ok) {
      output.any_failed = true;
      per_seed.push_back({{"seed", outcome.seed}, {"error", outcome.error}});
      continue;
    }
    const auto& scalars = result_jsons[i].at("scalars");
    final_acc.add(scalars.at("final_performance").get<double>());
    if (!scalars.at("backward_transfer").is_null()) {
      bwt_acc.add(scalars.at("backward_transfer").get<double>());
    }
    if (!scalars.at("forward_transfer").is_null()) {
      fwt_acc.add(scalars.at("forward_transfer").get<double>());
    }
    online_acc.add(scalars.at("online_performance").get<double>());
    wall_acc.add(result_jsons[i].at("wall_time_seconds").get<double>());
    per_seed.push_back({{"seed", outcome.seed},
                        {"path", std::filesystem::path(outcome.path)
                                     .filename()
                                     .string()},
                        {"scalars", scalars}});
  }

  nlohmann::json aggregates;
  aggregates["final_performance"] = {{"mean", final_acc.mean()},
                                     {"stddev", final_acc.stddev()},
                                     {"n", final_acc.n}};
  aggregates["backward_transfer"] =
      bwt_acc.n ? nlohmann::json{{"mean", bwt_acc.mean()},
                                 {"stddev", bwt_acc.stddev()},
                                 {"n", bwt_acc.n}}
                : nlohmann::json(nullptr);
  aggregates["forward_transfer"] =
      fwt_acc.n ? nlohmann::json{{"mean", fwt_acc.mean()},
                                 {"stddev", fwt_acc.stddev()},
                                 {"n", fwt_acc.n}}
                : nlohmann::json(nullptr);
  aggregates["online_performance"] = {{"mean", online_acc.mean()},
                                      {"stddev", online_acc.stddev()},
                                      {"n", online_acc.n}};
  aggregates["wall_time_seconds"] = {{"mean", wall_acc.mean()},
                                     {"stddev", wall_acc.stddev()},
                                     {"n", wall_acc.n}};

  nlohmann::json record = {
      {"run_id", run_name(config)},
      {"framework_version", kVersion},
      {"timestamp", timestamp_utc()},
      {"config", config_echo},
      {"per_seed", per_seed},
      {"aggregates", aggregates},
  };
  output.record_path =
      (std::filesystem::path(output.run_dir) / "record.json").string();
  write_file_atomic(output.record_path, record.dump(2) + "\n");
  for (const auto& outcome : outcomes) output.seeds.push_back(outcome);
  return output;
}

namespace {

std::string axis_summary(const AssumptionVector& v) {
  std::ostringstream out;
  out << (v.context_continuity == ContextContinuity::Continuous ? "continuous"
                                                                : "discrete")
      << "/"
      << (v.boundary_signal == BoundarySignal::Signaled ? "boundaries"
                                                        : "no-boundaries")
      << "/"
      << (v.context_observed == ContextObserved::Observed ? "task-ids"
                                                          : "no-task-ids")
      << "/"
      << (v.stationarity == Stationarity::Stationary ? "stationary"
                                                     : "non-stationary");
  return out.str();
}

}  // namespace

std::string list_settings_table() {
  std::ostringstream out;
  out << "setting                          assumptions"
         "                                              parents\n";
  for (const auto& node : canonical_catalog()) {
    if (node.assumptions.is_abstract()) continue;
    out << std::left << std::setw(33) << node.name << std::setw(57)
        << axis_summary(node.assumptions);
    for (std::size_t i = 0; i < node.parents.size(); ++i) {
      if (i) out << ", ";
      out << node.parents[i];
    }
    out << "\n";
  }
  return out.str();
}

std::string list_methods_table(const PluginRegistry& registry) {
  std::ostringstream out;
  out << "method     target                      applies_to\n";
  auto print = [&](const std::string& name, const std::string& target) {
    const AssumptionVector& vec = setting_or_throw(target).assumptions;
    const auto applicable = applicable_settings(vec);
    out << std::left << std::setw(11) << name << std::setw(28) << target
        << applicable.size() << " settings: ";
    for (std::size_t i = 0; i < applicable.size(); ++i) {
      if (i) out << ", ";
      out << applicable[i];
    }
    out << "\n";
  };
  for (const auto& preset : builtin_methods()) {
    print(preset.name, preset.target_setting);
  }
  for (const auto& manifest : registry.plugins()) {
    print(manifest.name + "*", manifest.target_setting);
  }
  if (!registry.plugins().empty()) out << "(* = plugin)\n";
  return out.str();
}

std::string list_envs_table() {
  std::ostringstream out;
  out << "family              branch   notes\n";
  out << "synthetic_gaussian  passive  gaussian-cluster classification, "
         "drift-capable\n";
  out << "split_csv           passive  csv dataset split by class into "
         "tasks\n";
  out << "cartpole            active   pole balancing, context-scaled "
         "constants, drift-capable\n";
  out << "gridworld           active   hand-authored layouts, one-hot "
         "position observations\n";
  return out.str();
}

}  // namespace cl
