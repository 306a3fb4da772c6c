#pragma once
#include <stdexcept>
#include <string>

namespace cl {

// Configuration problems: unknown names, inapplicable pairs, malformed
// fields.  The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  enum class Code {
    UnknownSetting,
    UnknownMethod,
    NotApplicable,
    MalformedField,
    BadEnvironment,
    BadPlugin,
  };

  ConfigError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

// Failures while executing a run (non-finite metrics, integration blow-up,
// plugin process death).  The CLI maps these to exit code 3.
class RunError : public std::runtime_error {
 public:
  explicit RunError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cl
