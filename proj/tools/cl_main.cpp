#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cl/errors.hpp"
#include "cl/harness/report.hpp"
#include "cl/harness/runner.hpp"
#include "cl/version.hpp"

namespace {

int do_list(const std::string& kind, const std::vector<std::string>& plugins) {
  if (kind == "settings") {
    std::cout << cl::list_settings_table();
  } else if (kind == "methods") {
    cl::PluginRegistry registry;
    for (const auto& path : plugins) registry.add_from_file(path);
    std::cout << cl::list_methods_table(registry);
  } else if (kind == "envs") {
    std::cout << cl::list_envs_table();
  } else {
    throw cl::ConfigError(cl::ConfigError::Code::MalformedField,
                          "list expects settings|methods|envs");
  }
  return 0;
}

int do_run(const std::string& config_path, int jobs, const std::string& out) {
  std::ifstream in(config_path);
  if (!in) {
    throw cl::ConfigError(cl::ConfigError::Code::MalformedField,
                          "cannot open config: " + config_path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  cl::ExperimentConfig config = cl::parse_config(buffer.str());
  if (!out.empty()) config.output_dir = out;
  cl::RunOutput output = cl::run_experiment(config, jobs);
  for (const auto& seed : output.seeds) {
    if (seed.ok) {
      std::cout << "seed " << seed.seed << ": ok -> " << seed.path << "\n";
    } else {
      std::cerr << "seed " << seed.seed << ": FAILED: " << seed.error << "\n";
    }
  }
  std::cout << "record: " << output.record_path << "\n";
  return output.any_failed ? 3 : 0;
}

int do_report(const std::vector<std::string>& dirs, const std::string& out,
              const std::string& reference) {
  cl::ReportPaths paths = cl::report(dirs, out, reference);
  std::cout << "comparison: " << paths.comparison_csv << "\n";
  std::cout << "plot data:  " << paths.plot_csv << "\n";
  for (const auto& p : paths.matrix_csvs) std::cout << "matrix:     " << p << "\n";
  return 0;
}

int do_lattice(const std::string& format) {
  if (format == "json") {
    std::cout << cl::lattice_to_json().dump(2) << "\n";
  } else if (format == "dot") {
    std::cout << cl::lattice_to_dot();
  } else {
    throw cl::ConfigError(cl::ConfigError::Code::MalformedField,
                          "lattice expects --format json|dot");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-learning settings, methods, and evaluation"};
  app.set_version_flag("--version", cl::kVersion);
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "list settings, methods, or envs");
  std::string list_kind;
  std::vector<std::string> list_plugins;
  list_cmd->add_option("kind", list_kind, "settings|methods|envs")->required();
  list_cmd->add_option("--plugins", list_plugins, "plugin manifest paths");

  auto* run_cmd = app.add_subcommand("run", "run a (setting, method) experiment");
  std::string config_path, out_dir;
  int jobs = 1;
  run_cmd->add_option("--config", config_path, "experiment config JSON")
      ->required();
  run_cmd->add_option("--jobs", jobs, "concurrent seeds");
  run_cmd->add_option("--out", out_dir, "override the output directory");

  auto* report_cmd = app.add_subcommand("report", "aggregate run directories");
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  std::string reference;
  report_cmd->add_option("dirs", report_dirs, "run directories")->required();
  report_cmd->add_option("--out", report_out, "report output directory");
  report_cmd->add_option("--reference", reference,
                         "method whose runtime normalizes the others");

  auto* lattice_cmd = app.add_subcommand("lattice", "export the setting lattice");
  std::string format = "json";
  lattice_cmd->add_option("--format", format, "json|dot");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list_cmd) return do_list(list_kind, list_plugins);
    if (*run_cmd) return do_run(config_path, jobs, out_dir);
    if (*report_cmd) return do_report(report_dirs, report_out, reference);
    if (*lattice_cmd) return do_lattice(format);
  } catch (const cl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cl::RunError& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
