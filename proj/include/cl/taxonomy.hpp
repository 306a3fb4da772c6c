#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cl {

// One axis per assumption.  Numeric order encodes "more informative /
// more restricted"; branch is the exception (Passive and Active are
// incomparable, both above Unspecified).
enum class ContextContinuity : std::uint8_t { Continuous = 0, Discrete = 1 };
enum class BoundarySignal : std::uint8_t { Hidden = 0, Signaled = 1 };
enum class ContextObserved : std::uint8_t { Hidden = 0, Observed = 1 };
enum class Stationarity : std::uint8_t { NonStationary = 0, Stationary = 1 };
enum class Branch : std::uint8_t { Unspecified = 0, Passive = 1, Active = 2 };

struct AssumptionVector {
  ContextContinuity context_continuity = ContextContinuity::Continuous;
  BoundarySignal boundary_signal = BoundarySignal::Hidden;
  ContextObserved context_observed = ContextObserved::Hidden;
  Stationarity stationarity = Stationarity::NonStationary;
  Branch branch = Branch::Unspecified;

  bool operator==(const AssumptionVector&) const = default;

  // Abstract vectors (branch unspecified) may be method targets but are
  // never instantiated as runnable settings.
  bool is_abstract() const { return branch == Branch::Unspecified; }
};

// Stationary settings have discrete tasks and trivially known boundaries.
bool is_valid(const AssumptionVector& v);

// True iff b is at-least-as-informative as a on every axis.  Partial
// order: reflexive, antisymmetric, transitive.
bool axis_leq(const AssumptionVector& a, const AssumptionVector& b);

// Name of the first axis on which target exceeds setting, or "" when
// axis_leq(target, setting) holds.  Used for applicability refusals.
std::string failing_axis(const AssumptionVector& target,
                         const AssumptionVector& setting);

struct SettingNode {
  std::string name;
  AssumptionVector assumptions;
  std::vector<std::string> parents;  // covering elements only (Hasse)
};

struct MethodDescriptor {
  std::string name;
  AssumptionVector target;
  std::map<std::string, double> hyperparameters;
};

// The 6 trunk settings crossed with {Unspecified, Passive, Active}:
// 18 nodes, parents filled from the computed covering relation.
const std::vector<SettingNode>& canonical_catalog();

// Covering relation (parent -> child) of the strict order induced by
// axis_leq over the given nodes; transitive reduction, acyclic.
std::vector<std::pair<std::string, std::string>> hasse_edges(
    const std::vector<SettingNode>& catalog);

const SettingNode* find_setting(const std::string& name);
// Throws ConfigError::UnknownSetting.
const SettingNode& setting_or_throw(const std::string& name);
std::string setting_name(const AssumptionVector& v);

// True iff the method's target is at or above the (concrete) setting.
// Throws ConfigError::NotApplicable if setting is abstract.
bool is_applicable(const MethodDescriptor& method,
                   const AssumptionVector& setting);

// Concrete catalog settings the target applies to.
std::vector<std::string> applicable_settings(const AssumptionVector& target);

nlohmann::json lattice_to_json();
std::string lattice_to_dot();

void to_json(nlohmann::json& j, const AssumptionVector& v);
void from_json(const nlohmann::json& j, AssumptionVector& v);

}  // namespace cl
