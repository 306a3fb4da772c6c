#pragma once
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/methods/method.hpp"

namespace cl {

// External methods are executables speaking line-delimited JSON over
// their standard streams: the harness sends observations and step
// results, the plugin replies with actions.  Test-time observations
// carry no feedback, so a conforming plugin cannot learn from them.
struct PluginManifest {
  std::string name;
  std::string target_setting;
  std::vector<std::string> entry;  // argv; entry[0] resolved against the
                                   // manifest's directory when relative
};

PluginManifest load_manifest(const std::string& path);

// Builtin names stay reserved; duplicates are rejected.
class PluginRegistry {
 public:
  void add(PluginManifest manifest);
  void add_from_file(const std::string& path);
  const PluginManifest* find(const std::string& name) const;
  const std::vector<PluginManifest>& plugins() const { return plugins_; }

 private:
  std::vector<PluginManifest> plugins_;
};

MethodDescriptor plugin_descriptor(
    const PluginManifest& manifest,
    const std::map<std::string, double>& hyperparameters);

class PluginProcess {
 public:
  explicit PluginProcess(const std::vector<std::string>& argv);
  ~PluginProcess();
  PluginProcess(const PluginProcess&) = delete;
  PluginProcess& operator=(const PluginProcess&) = delete;

  void send(const nlohmann::json& message);
  nlohmann::json recv();

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// Method adapter driving a plugin process through the stream protocol.
class PluginMethod : public Method {
 public:
  PluginMethod(const PluginManifest& manifest, const SettingContext& setting,
               const std::map<std::string, double>& hyperparameters);
  ~PluginMethod() override;

  void begin_phase(long long budget) override;
  int train_act(const Observation& obs) override;
  void train_feedback(const Observation& obs, int action, double reward,
                      std::optional<int> label, bool done) override;
  void end_phase() override;
  int act(const Observation& obs) override;
  void on_task_switch(std::optional<int> task_id) override;
  long long update_count() const override { return 0; }
  int switch_count() const override { return switches_; }

 private:
  int request_action(const Observation& obs, const char* mode);

  std::unique_ptr<PluginProcess> process_;
  int switches_ = 0;
};

}  // namespace cl
