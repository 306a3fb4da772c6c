#include "cl/harness/plugin.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cl/errors.hpp"

namespace cl {

PluginManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Code::BadPlugin,
                      "cannot open plugin manifest: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Code::BadPlugin,
                      path + ": invalid manifest JSON: " + e.what());
  }
  PluginManifest manifest;
  try {
    manifest.name = j.at("name").get<std::string>();
    manifest.target_setting = j.at("target").get<std::string>();
    manifest.entry = j.at("entry").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Code::BadPlugin,
                      path + ": manifest needs name, target, entry: " +
                          std::string(e.what()));
  }
  if (manifest.entry.empty()) {
    throw ConfigError(ConfigError::Code::BadPlugin,
                      path + ": empty entry point");
  }
  // target must name a catalog setting (abstract targets are fine)
  setting_or_throw(manifest.target_setting);
  namespace fs = std::filesystem;
  fs::path exe(manifest.entry[0]);
  if (exe.is_relative()) {
    fs::path resolved = fs::absolute(fs::path(path).parent_path() / exe);
    if (fs::exists(resolved)) manifest.entry[0] = resolved.string();
  }
  return manifest;
}

void PluginRegistry::add(PluginManifest manifest) {
  if (find_builtin_method(manifest.name) != nullptr) {
    throw ConfigError(ConfigError::Code::BadPlugin,
                      "plugin name collides with a builtin method: " +
                          manifest.name);
  }
  for (const auto& existing : plugins_) {
    if (existing.name == manifest.name) {
      throw ConfigError(ConfigError::Code::BadPlugin,
                        "duplicate plugin name: " + manifest.name);
    }
  }
  plugins_.push_back(std::move(manifest));
}

void PluginRegistry::add_from_file(const std::string& path) {
  add(load_manifest(path));
}

const PluginManifest* PluginRegistry::find(const std::string& name) const {
  for (const auto& manifest : plugins_) {
    if (manifest.name == name) return &manifest;
  }
  return nullptr;
}

MethodDescriptor plugin_descriptor(
    const PluginManifest& manifest,
    const std::map<std::string, double>& hyperparameters) {
  MethodDescriptor desc;
  desc.name = manifest.name;
  desc.target = setting_or_throw(manifest.target_setting).assumptions;
  desc.hyperparameters = hyperparameters;
  return desc;
}

PluginProcess::PluginProcess(const std::vector<std::string>& argv) {
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw RunError("plugin pipe failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw RunError("plugin fork failed");
  if (pid_ == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    std::fprintf(stderr, "plugin exec failed: %s: %s\n", args[0],
                 std::strerror(errno));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

PluginProcess::~PluginProcess() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
}

void PluginProcess::send(const nlohmann::json& message) {
  const std::string line = message.dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n =
        write(to_child_, line.data() + written, line.size() - written);
    if (n <= 0) throw RunError("plugin stdin closed");
    written += static_cast<std::size_t>(n);
  }
}

nlohmann::json PluginProcess::recv() {
  while (true) {
    const std::size_t newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      const std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      try {
        return nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw RunError("plugin wrote invalid JSON: " + line);
      }
    }
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n <= 0) throw RunError("plugin exited mid-protocol");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

namespace {

nlohmann::json obs_to_json(const Observation& obs) {
  return nlohmann::json{
      {"x", obs.x},
      {"task_id", obs.task_id ? nlohmann::json(*obs.task_id)
                              : nlohmann::json(nullptr)},
      {"boundary", obs.boundary ? nlohmann::json(*obs.boundary)
                                : nlohmann::json(nullptr)},
      {"episode_done", obs.episode_done}};
}

}  // namespace

PluginMethod::PluginMethod(const PluginManifest& manifest,
                           const SettingContext& setting,
                           const std::map<std::string, double>& hyperparameters) {
  process_ = std::make_unique<PluginProcess>(manifest.entry);
  nlohmann::json ctx;
  to_json(ctx, setting);
  process_->send({{"op", "configure"},
                  {"name", manifest.name},
                  {"setting", ctx},
                  {"hyperparameters", hyperparameters}});
  const nlohmann::json reply = process_->recv();
  if (!reply.value("ok", false)) {
    throw RunError("plugin refused configuration: " + reply.dump());
  }
}

PluginMethod::~PluginMethod() {
  try {
    process_->send({{"op", "shutdown"}});
  } catch (...) {
  }
}

void PluginMethod::begin_phase(long long budget) {
  process_->send({{"op", "fit_begin"}, {"budget", budget}});
}

int PluginMethod::request_action(const Observation& obs, const char* mode) {
  nlohmann::json msg = {{"op", "obs"}, {"mode", mode}};
  msg["obs"] = obs_to_json(obs);
  process_->send(msg);
  const nlohmann::json reply = process_->recv();
  if (!reply.contains("action")) {
    throw RunError("plugin reply missing action: " + reply.dump());
  }
  return reply.at("action").get<int>();
}

int PluginMethod::train_act(const Observation& obs) {
  return request_action(obs, "train");
}

void PluginMethod::train_feedback(const Observation&, int, double reward,
                                  std::optional<int> label, bool done) {
  process_->send(
      {{"op", "step_result"},
       {"reward", reward},
       {"label", label ? nlohmann::json(*label) : nlohmann::json(nullptr)},
       {"done", done}});
}

void PluginMethod::end_phase() {
  process_->send({{"op", "fit_end"}});
  process_->recv();  // sync
}

int PluginMethod::act(const Observation& obs) {
  return request_action(obs, "test");
}

void PluginMethod::on_task_switch(std::optional<int> task_id) {
  ++switches_;
  process_->send({{"op", "task_switch"},
                  {"task_id", task_id ? nlohmann::json(*task_id)
                                      : nlohmann::json(nullptr)}});
  process_->recv();
}

}  // namespace cl
