// Example external method speaking the plugin stream protocol on
// stdin/stdout: a fine-tuning baseline built on the shipped learner, so
// its behavior matches the in-process `base` method given the same seed.
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "cl/methods/method.hpp"

using nlohmann::json;

namespace {

cl::Observation obs_from_json(const json& j) {
  cl::Observation obs;
  obs.x = j.at("x").get<std::vector<double>>();
  if (!j.at("task_id").is_null()) obs.task_id = j.at("task_id").get<int>();
  if (!j.at("boundary").is_null()) obs.boundary = j.at("boundary").get<bool>();
  obs.episode_done = j.at("episode_done").get<bool>();
  return obs;
}

}  // namespace

int main() {
  std::optional<cl::MethodInstance> method;
  cl::Observation last_obs;
  int last_action = 0;
  bool have_pending = false;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception&) {
      std::cerr << "plugin_baseline: bad message: " << line << "\n";
      return 1;
    }
    const std::string op = msg.at("op").get<std::string>();
    try {
      if (op == "configure") {
        cl::SettingContext ctx;
        cl::from_json(msg.at("setting"), ctx);
        std::map<std::string, double> hyper;
        if (msg.contains("hyperparameters") &&
            msg.at("hyperparameters").is_object()) {
          hyper = msg.at("hyperparameters")
                      .get<std::map<std::string, double>>();
        }
        cl::MethodDescriptor desc = cl::make_builtin_descriptor("base", hyper);
        desc.name = msg.value("name", std::string("plugin"));
        method.emplace(cl::MethodInstance::configure(desc, ctx));
        std::cout << json{{"ok", true}}.dump() << "\n" << std::flush;
      } else if (op == "fit_begin") {
        method->begin_phase(msg.at("budget").get<long long>());
      } else if (op == "obs") {
        const cl::Observation obs = obs_from_json(msg.at("obs"));
        int action;
        if (msg.at("mode").get<std::string>() == "train") {
          action = method->train_act(obs);
          last_obs = obs;
          have_pending = true;
        } else {
          action = method->act(obs);
        }
        last_action = action;
        std::cout << json{{"action", action}}.dump() << "\n" << std::flush;
      } else if (op == "step_result") {
        if (!have_pending) continue;
        std::optional<int> label;
        if (!msg.at("label").is_null()) label = msg.at("label").get<int>();
        method->train_feedback(last_obs, last_action,
                               msg.at("reward").get<double>(), label,
                               msg.at("done").get<bool>());
        have_pending = false;
      } else if (op == "fit_end") {
        method->end_phase();
        std::cout << json{{"ok", true}}.dump() << "\n" << std::flush;
      } else if (op == "task_switch") {
        std::optional<int> task_id;
        if (!msg.at("task_id").is_null()) task_id = msg.at("task_id").get<int>();
        method->on_task_switch(task_id);
        std::cout << json{{"ok", true}}.dump() << "\n" << std::flush;
      } else if (op == "shutdown") {
        return 0;
      } else {
        std::cerr << "plugin_baseline: unknown op " << op << "\n";
        return 1;
      }
    } catch (const std::exception& e) {
      std::cerr << "plugin_baseline: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
