#include "cl/taxonomy.hpp"

#include <algorithm>
#include <sstream>

#include "cl/errors.hpp"

namespace cl {

bool is_valid(const AssumptionVector& v) {
  if (v.stationarity == Stationarity::Stationary) {
    if (v.context_continuity != ContextContinuity::Discrete) return false;
    if (v.boundary_signal != BoundarySignal::Signaled) return false;
  }
  return true;
}

namespace {

bool branch_leq(Branch a, Branch b) {
  return a == b || a == Branch::Unspecified;
}

struct TrunkDef {
  const char* name;
  AssumptionVector vec;
};

const std::vector<TrunkDef>& trunk_defs() {
  using CC = ContextContinuity;
  using BS = BoundarySignal;
  using CO = ContextObserved;
  using ST = Stationarity;
  static const std::vector<TrunkDef> defs = {
      {"continuous_task_agnostic",
       {CC::Continuous, BS::Hidden, CO::Hidden, ST::NonStationary}},
      {"discrete_task_agnostic",
       {CC::Discrete, BS::Hidden, CO::Hidden, ST::NonStationary}},
      {"incremental",
       {CC::Discrete, BS::Signaled, CO::Hidden, ST::NonStationary}},
      {"task_incremental",
       {CC::Discrete, BS::Signaled, CO::Observed, ST::NonStationary}},
      {"multi_task",
       {CC::Discrete, BS::Signaled, CO::Observed, ST::Stationary}},
      {"traditional",
       {CC::Discrete, BS::Signaled, CO::Hidden, ST::Stationary}},
  };
  return defs;
}

std::vector<SettingNode> build_catalog() {
  std::vector<SettingNode> nodes;
  for (const auto& [suffix, branch] :
       std::vector<std::pair<std::string, Branch>>{
           {"", Branch::Unspecified},
           {"_sl", Branch::Passive},
           {"_rl", Branch::Active}}) {
    for (const auto& def : trunk_defs()) {
      SettingNode node;
      node.name = def.name + suffix;
      node.assumptions = def.vec;
      node.assumptions.branch = branch;
      nodes.push_back(std::move(node));
    }
  }
  auto edges = hasse_edges(nodes);
  for (auto& node : nodes) {
    for (const auto& [parent, child] : edges) {
      if (child == node.name) node.parents.push_back(parent);
    }
    std::sort(node.parents.begin(), node.parents.end());
  }
  return nodes;
}

const char* axis_names[] = {"context_continuity", "boundary_signal",
                            "context_observed", "stationarity", "branch"};

}  // namespace

bool axis_leq(const AssumptionVector& a, const AssumptionVector& b) {
  return a.context_continuity <= b.context_continuity &&
         a.boundary_signal <= b.boundary_signal &&
         a.context_observed <= b.context_observed &&
         a.stationarity <= b.stationarity && branch_leq(a.branch, b.branch);
}

std::string failing_axis(const AssumptionVector& target,
                         const AssumptionVector& setting) {
  std::string failing;
  auto note = [&](const char* axis) {
    if (!failing.empty()) failing += ", ";
    failing += axis;
  };
  if (target.context_continuity > setting.context_continuity)
    note(axis_names[0]);
  if (target.boundary_signal > setting.boundary_signal) note(axis_names[1]);
  if (target.context_observed > setting.context_observed) note(axis_names[2]);
  if (target.stationarity > setting.stationarity) note(axis_names[3]);
  if (!branch_leq(target.branch, setting.branch)) note(axis_names[4]);
  return failing;
}

const std::vector<SettingNode>& canonical_catalog() {
  static const std::vector<SettingNode> catalog = build_catalog();
  return catalog;
}

std::vector<std::pair<std::string, std::string>> hasse_edges(
    const std::vector<SettingNode>& catalog) {
  const std::size_t n = catalog.size();
  auto strict_less = [&](std::size_t i, std::size_t j) {
    return axis_leq(catalog[i].assumptions, catalog[j].assumptions) &&
           !(catalog[i].assumptions == catalog[j].assumptions);
  };
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!strict_less(i, j)) continue;
      bool covering = true;
      for (std::size_t k = 0; k < n && covering; ++k) {
        if (k != i && k != j && strict_less(i, k) && strict_less(k, j))
          covering = false;
      }
      if (covering) edges.emplace_back(catalog[i].name, catalog[j].name);
    }
  }
  return edges;
}

const SettingNode* find_setting(const std::string& name) {
  for (const auto& node : canonical_catalog()) {
    if (node.name == name) return &node;
  }
  return nullptr;
}

const SettingNode& setting_or_throw(const std::string& name) {
  const SettingNode* node = find_setting(name);
  if (!node) {
    throw ConfigError(ConfigError::Code::UnknownSetting,
                      "unknown setting: " + name);
  }
  return *node;
}

std::string setting_name(const AssumptionVector& v) {
  for (const auto& node : canonical_catalog()) {
    if (node.assumptions == v) return node.name;
  }
  return "";
}

bool is_applicable(const MethodDescriptor& method,
                   const AssumptionVector& setting) {
  if (setting.is_abstract()) {
    throw ConfigError(ConfigError::Code::NotApplicable,
                      "setting is abstract (branch unspecified); only "
                      "concrete settings are runnable");
  }
  return axis_leq(method.target, setting);
}

std::vector<std::string> applicable_settings(const AssumptionVector& target) {
  std::vector<std::string> names;
  for (const auto& node : canonical_catalog()) {
    if (node.assumptions.is_abstract()) continue;
    if (axis_leq(target, node.assumptions)) names.push_back(node.name);
  }
  return names;
}

namespace {

template <typename E>
E parse_enum(const nlohmann::json& j, const char* field,
             const std::vector<std::pair<std::string, E>>& table) {
  const std::string s = j.at(field).get<std::string>();
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw ConfigError(ConfigError::Code::MalformedField,
                    std::string("bad value for ") + field + ": " + s);
}

template <typename E>
std::string enum_name(E value,
                      const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

const std::vector<std::pair<std::string, ContextContinuity>> kContinuity = {
    {"continuous", ContextContinuity::Continuous},
    {"discrete", ContextContinuity::Discrete}};
const std::vector<std::pair<std::string, BoundarySignal>> kBoundary = {
    {"hidden", BoundarySignal::Hidden},
    {"signaled", BoundarySignal::Signaled}};
const std::vector<std::pair<std::string, ContextObserved>> kObserved = {
    {"hidden", ContextObserved::Hidden},
    {"observed", ContextObserved::Observed}};
const std::vector<std::pair<std::string, Stationarity>> kStationarity = {
    {"non_stationary", Stationarity::NonStationary},
    {"stationary", Stationarity::Stationary}};
const std::vector<std::pair<std::string, Branch>> kBranch = {
    {"unspecified", Branch::Unspecified},
    {"passive", Branch::Passive},
    {"active", Branch::Active}};

}  // namespace

void to_json(nlohmann::json& j, const AssumptionVector& v) {
  j = nlohmann::json{
      {"context_continuity", enum_name(v.context_continuity, kContinuity)},
      {"boundary_signal", enum_name(v.boundary_signal, kBoundary)},
      {"context_observed", enum_name(v.context_observed, kObserved)},
      {"stationarity", enum_name(v.stationarity, kStationarity)},
      {"branch", enum_name(v.branch, kBranch)}};
}

void from_json(const nlohmann::json& j, AssumptionVector& v) {
  v.context_continuity = parse_enum(j, "context_continuity", kContinuity);
  v.boundary_signal = parse_enum(j, "boundary_signal", kBoundary);
  v.context_observed = parse_enum(j, "context_observed", kObserved);
  v.stationarity = parse_enum(j, "stationarity", kStationarity);
  v.branch = parse_enum(j, "branch", kBranch);
}

nlohmann::json lattice_to_json() {
  const auto& catalog = canonical_catalog();
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : catalog) {
    nlohmann::json assumptions;
    to_json(assumptions, node.assumptions);
    nodes.push_back({{"name", node.name},
                     {"assumptions", assumptions},
                     {"parents", node.parents},
                     {"abstract", node.assumptions.is_abstract()}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [parent, child] : hasse_edges(catalog)) {
    edges.push_back({{"parent", parent}, {"child", child}});
  }
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}};
}

std::string lattice_to_dot() {
  std::ostringstream out;
  out << "digraph settings {\n  rankdir=TB;\n";
  for (const auto& node : canonical_catalog()) {
    out << "  \"" << node.name << "\"";
    if (node.assumptions.is_abstract()) out << " [style=dashed]";
    out << ";\n";
  }
  for (const auto& [parent, child] : hasse_edges(canonical_catalog())) {
    out << "  \"" << parent << "\" -> \"" << child << "\";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace cl
