#include "cl/harness/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cl/errors.hpp"
#include "cl/harness/runner.hpp"

namespace cl {

namespace {

struct LoadedRun {
  std::string run_id;
  std::string method;
  std::string setting;
  std::string family;
  std::string metric_kind;
  nlohmann::json aggregates;
  TransferMatrix mean_matrix;
  int seeds_ok = 0;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "cannot open " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      path + ": invalid JSON: " + e.what());
  }
  return j;
}

LoadedRun load_run(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path record_path = fs::path(dir);
  if (fs::is_directory(record_path)) record_path /= "record.json";
  nlohmann::json record = read_json_file(record_path.string());
  LoadedRun run;
  run.run_id = record.at("run_id").get<std::string>();
  run.method = record.at("config").at("method").at("name").get<std::string>();
  run.setting = record.at("config").at("setting").get<std::string>();
  run.family =
      record.at("config").at("environment").at("family").get<std::string>();
  run.aggregates = record.at("aggregates");
  for (const auto& entry : record.at("per_seed")) {
    if (!entry.contains("path")) continue;
    const fs::path seed_path =
        record_path.parent_path() / entry.at("path").get<std::string>();
    Results results = results_from_json(read_json_file(seed_path.string()));
    if (run.seeds_ok == 0) {
      run.mean_matrix = results.matrix;
      run.metric_kind = results.matrix.metric_kind;
    } else {
      if (results.matrix.rows != run.mean_matrix.rows ||
          results.matrix.cols != run.mean_matrix.cols) {
        throw ConfigError(ConfigError::Code::MalformedField,
                          run.run_id + ": seed matrices differ in shape");
      }
      for (std::size_t i = 0; i < results.matrix.v.size(); ++i) {
        run.mean_matrix.v[i] += results.matrix.v[i];
      }
    }
    ++run.seeds_ok;
  }
  if (run.seeds_ok > 0) {
    for (double& v : run.mean_matrix.v) v /= run.seeds_ok;
  }
  return run;
}

std::string fmt(double v) { return nlohmann::json(v).dump(); }

std::string agg_mean(const nlohmann::json& aggregates, const char* key) {
  const auto& entry = aggregates.at(key);
  if (entry.is_null()) return "";
  return fmt(entry.at("mean").get<double>());
}

std::string agg_std(const nlohmann::json& aggregates, const char* key) {
  const auto& entry = aggregates.at(key);
  if (entry.is_null()) return "";
  return fmt(entry.at("stddev").get<double>());
}

}  // namespace

ReportPaths report(const std::vector<std::string>& run_dirs,
                   const std::string& out_dir,
                   const std::string& reference_method) {
  if (run_dirs.empty()) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "report needs at least one run directory");
  }
  std::vector<LoadedRun> runs;
  for (const auto& dir : run_dirs) runs.push_back(load_run(dir));
  for (const auto& run : runs) {
    if (run.seeds_ok == 0) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        run.run_id + ": no successful seeds to report");
    }
    if (run.metric_kind != runs.front().metric_kind) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        "mixed metric kinds in one comparison: " +
                            runs.front().metric_kind + " vs " +
                            run.metric_kind);
    }
  }

  std::string reference = reference_method;
  if (reference.empty()) {
    reference = runs.front().method;
    for (const auto& run : runs) {
      if (run.method == "base") reference = "base";
    }
  }
  double reference_wall = 0.0;
  bool reference_found = false;
  for (const auto& run : runs) {
    if (run.method == reference) {
      reference_wall =
          run.aggregates.at("wall_time_seconds").at("mean").get<double>();
      reference_found = true;
      break;
    }
  }
  if (!reference_found) {
    throw ConfigError(ConfigError::Code::MalformedField,
                      "reference method '" + reference +
                          "' is not among the reported runs");
  }

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReportPaths paths;

  std::ostringstream comparison;
  comparison << "method,setting,family,metric_kind,final_mean,final_std,"
                "bwt_mean,fwt_mean,online_mean,wall_time_mean,"
                "normalized_runtime\n";
  std::ostringstream plot;
  plot << "method,setting,x_wall_time,x_online,y_final\n";
  for (const auto& run : runs) {
    const double wall =
        run.aggregates.at("wall_time_seconds").at("mean").get<double>();
    const double normalized =
        reference_wall > 0.0 ? wall / reference_wall : 0.0;
    comparison << run.method << "," << run.setting << "," << run.family << ","
               << run.metric_kind << ","
               << agg_mean(run.aggregates, "final_performance") << ","
               << agg_std(run.aggregates, "final_performance") << ","
               << agg_mean(run.aggregates, "backward_transfer") << ","
               << agg_mean(run.aggregates, "forward_transfer") << ","
               << agg_mean(run.aggregates, "online_performance") << ","
               << fmt(wall) << "," << fmt(normalized) << "\n";
    plot << run.method << "," << run.setting << "," << fmt(wall) << ","
         << agg_mean(run.aggregates, "online_performance") << ","
         << agg_mean(run.aggregates, "final_performance") << "\n";

    const std::string matrix_path =
        (fs::path(out_dir) / ("matrix_" + run.run_id + ".csv")).string();
    write_file_atomic(matrix_path, matrix_to_csv(run.mean_matrix));
    paths.matrix_csvs.push_back(matrix_path);
  }
  paths.comparison_csv = (fs::path(out_dir) / "comparison.csv").string();
  write_file_atomic(paths.comparison_csv, comparison.str());
  paths.plot_csv = (fs::path(out_dir) / "plot_data.csv").string();
  write_file_atomic(paths.plot_csv, plot.str());
  return paths;
}

}  // namespace cl
