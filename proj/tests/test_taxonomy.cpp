#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "cl/errors.hpp"
#include "cl/taxonomy.hpp"

using namespace cl;

namespace {

const AssumptionVector& vec_of(const std::string& name) {
  return setting_or_throw(name).assumptions;
}

// Independent oracle: transitive reduction computed from the full strict
// relation matrix, without reference to hasse_edges' own covering test.
std::vector<std::pair<std::string, std::string>> brute_force_reduction() {
  const auto& catalog = canonical_catalog();
  const std::size_t n = catalog.size();
  std::vector<std::vector<bool>> less(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      less[i][j] = axis_leq(catalog[i].assumptions, catalog[j].assumptions) &&
                   !(catalog[i].assumptions == catalog[j].assumptions);
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!less[i][j]) continue;
      bool redundant = false;
      for (std::size_t k = 0; k < n; ++k)
        if (less[i][k] && less[k][j]) redundant = true;
      if (!redundant) edges.emplace_back(catalog[i].name, catalog[j].name);
    }
  return edges;
}

}  // namespace

TEST_CASE("catalog has 6 trunk + 12 concrete nodes") {
  const auto& catalog = canonical_catalog();
  CHECK(catalog.size() == 18);
  int abstract_count = 0, concrete = 0;
  for (const auto& node : catalog) {
    CHECK(is_valid(node.assumptions));
    node.assumptions.is_abstract() ? ++abstract_count : ++concrete;
  }
  CHECK(abstract_count == 6);
  CHECK(concrete == 12);
  CHECK(find_setting("task_incremental_sl") != nullptr);
  CHECK(find_setting("continuous_task_agnostic_rl") != nullptr);
  CHECK(find_setting("nonsense") == nullptr);
}

TEST_CASE("partial order laws hold over all 18x18 catalog pairs") {
  const auto& catalog = canonical_catalog();
  for (const auto& a : catalog) {
    CHECK(axis_leq(a.assumptions, a.assumptions));  // reflexive
    for (const auto& b : catalog) {
      if (axis_leq(a.assumptions, b.assumptions) &&
          axis_leq(b.assumptions, a.assumptions)) {
        CHECK(a.assumptions == b.assumptions);  // antisymmetric
      }
      for (const auto& c : catalog) {  // transitive
        if (axis_leq(a.assumptions, b.assumptions) &&
            axis_leq(b.assumptions, c.assumptions)) {
          CHECK(axis_leq(a.assumptions, c.assumptions));
        }
      }
    }
  }
}

TEST_CASE("axis_leq spec examples") {
  CHECK(axis_leq(vec_of("continuous_task_agnostic"),
                 vec_of("continuous_task_agnostic")));
  CHECK(axis_leq(vec_of("incremental"), vec_of("task_incremental_sl")));
  CHECK_FALSE(
      axis_leq(vec_of("task_incremental_sl"), vec_of("traditional_sl")));
  CHECK_FALSE(
      axis_leq(vec_of("traditional_sl"), vec_of("task_incremental_sl")));
}

TEST_CASE("stationary vectors require discrete signaled") {
  AssumptionVector v;
  v.stationarity = Stationarity::Stationary;
  v.context_continuity = ContextContinuity::Continuous;
  v.boundary_signal = BoundarySignal::Signaled;
  CHECK_FALSE(is_valid(v));
  v.context_continuity = ContextContinuity::Discrete;
  v.boundary_signal = BoundarySignal::Hidden;
  CHECK_FALSE(is_valid(v));
  v.boundary_signal = BoundarySignal::Signaled;
  CHECK(is_valid(v));
}

TEST_CASE("hasse edges equal brute-force transitive reduction") {
  auto got = hasse_edges(canonical_catalog());
  auto expect = brute_force_reduction();
  std::sort(got.begin(), got.end());
  std::sort(expect.begin(), expect.end());
  CHECK(got == expect);
}

TEST_CASE("trunk chain and diamond match the canonical structure") {
  auto edges = hasse_edges(canonical_catalog());
  auto has_edge = [&](const std::string& p, const std::string& c) {
    return std::find(edges.begin(), edges.end(), std::make_pair(p, c)) !=
           edges.end();
  };
  CHECK(has_edge("continuous_task_agnostic", "discrete_task_agnostic"));
  CHECK(has_edge("discrete_task_agnostic", "incremental"));
  CHECK(has_edge("incremental", "task_incremental"));
  CHECK(has_edge("incremental", "traditional"));
  CHECK(has_edge("task_incremental", "multi_task"));
  CHECK(has_edge("traditional", "multi_task"));
  // implied through discrete_task_agnostic, so absent in the reduction
  CHECK_FALSE(has_edge("continuous_task_agnostic", "incremental"));
  // same structure on each branch
  for (const std::string suffix : {"_sl", "_rl"}) {
    CHECK(has_edge("continuous_task_agnostic" + suffix,
                   "discrete_task_agnostic" + suffix));
    CHECK(has_edge("incremental" + suffix, "traditional" + suffix));
    CHECK(has_edge("traditional" + suffix, "multi_task" + suffix));
  }
}

TEST_CASE("parents from the spec examples") {
  auto parents = setting_or_throw("discrete_task_agnostic_rl").parents;
  std::sort(parents.begin(), parents.end());
  CHECK(parents == std::vector<std::string>{"continuous_task_agnostic_rl",
                                            "discrete_task_agnostic"});
  CHECK(setting_or_throw("continuous_task_agnostic").parents.empty());
  auto mt = setting_or_throw("multi_task").parents;
  std::sort(mt.begin(), mt.end());
  CHECK(mt == std::vector<std::string>{"task_incremental", "traditional"});
}

TEST_CASE("every concrete node reachable from the root") {
  const auto& catalog = canonical_catalog();
  auto edges = hasse_edges(catalog);
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& [p, c] : edges) children[p].push_back(c);
  std::set<std::string> seen;
  std::vector<std::string> stack = {"continuous_task_agnostic"};
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    for (const auto& c : children[cur]) stack.push_back(c);
  }
  for (const auto& node : catalog) CHECK(seen.count(node.name) == 1);
}

TEST_CASE("is_applicable matches axis_leq and rejects abstract settings") {
  MethodDescriptor m{"m", vec_of("incremental"), {}};
  CHECK(is_applicable(m, vec_of("task_incremental_sl")));
  MethodDescriptor passive{"p", vec_of("incremental_sl"), {}};
  CHECK_FALSE(is_applicable(passive, vec_of("incremental_rl")));
  MethodDescriptor dta{"d", vec_of("discrete_task_agnostic"), {}};
  CHECK_FALSE(is_applicable(dta, vec_of("continuous_task_agnostic_sl")));
  CHECK_THROWS_AS(is_applicable(m, vec_of("incremental")), ConfigError);
}

TEST_CASE("applicability closure over all method/setting pairs") {
  const auto& catalog = canonical_catalog();
  for (const auto& target : catalog) {
    MethodDescriptor m{"m", target.assumptions, {}};
    for (const auto& s : catalog) {
      if (s.assumptions.is_abstract()) continue;
      for (const auto& s2 : catalog) {
        if (s2.assumptions.is_abstract()) continue;
        if (axis_leq(s.assumptions, s2.assumptions) &&
            is_applicable(m, s.assumptions)) {
          CHECK(is_applicable(m, s2.assumptions));
        }
      }
    }
  }
}

TEST_CASE("base method target applies to all 12 concrete settings") {
  CHECK(applicable_settings(vec_of("continuous_task_agnostic")).size() == 12);
  // branch-specific incremental target: 4 concrete descendants
  CHECK(applicable_settings(vec_of("incremental_sl")).size() == 4);
}

TEST_CASE("assumption vector json round trip") {
  for (const auto& node : canonical_catalog()) {
    nlohmann::json j;
    to_json(j, node.assumptions);
    AssumptionVector back;
    from_json(j, back);
    CHECK(back == node.assumptions);
  }
}

TEST_CASE("lattice export contains nodes and edges") {
  auto j = lattice_to_json();
  CHECK(j["nodes"].size() == 18);
  CHECK(j["edges"].size() == hasse_edges(canonical_catalog()).size());
  auto dot = lattice_to_dot();
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("task_incremental_sl") != std::string::npos);
}
