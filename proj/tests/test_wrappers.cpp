#include <doctest.h>

#include <map>

#include "cl/envsim/environment.hpp"
#include "cl/errors.hpp"

using namespace cl;

namespace {

EnvironmentSpec sl_spec(ScheduleKind kind, int tasks = 3) {
  EnvironmentSpec spec;
  spec.family = Family::SyntheticGaussianSL;
  spec.schedule_kind = kind;
  spec.num_tasks = tasks;
  spec.steps_per_phase = 50;
  spec.feature_dim = 8;
  spec.classes_per_task = 2;
  return spec;
}

EnvironmentSpec rl_spec(ScheduleKind kind, int tasks = 2) {
  EnvironmentSpec spec;
  spec.family = Family::CartPoleVariant;
  spec.schedule_kind = kind;
  spec.num_tasks = tasks;
  spec.steps_per_phase = 60;
  return spec;
}

std::unique_ptr<Environment> build(const EnvironmentSpec& spec,
                                   const AssumptionVector& assumptions,
                                   std::uint64_t seed = 10,
                                   bool enforce = true) {
  auto handle = FamilyHandle::load(spec, seed);
  auto schedule = make_schedule_for(*handle, seed);
  return wrap_for_setting(
      make_base_environment(handle, schedule, seed + 1, EnvRole::Train),
      assumptions, enforce);
}

const AssumptionVector& assumptions_of(const std::string& name) {
  return setting_or_throw(name).assumptions;
}

}  // namespace

TEST_CASE("masking matches the assumption vector on every observation") {
  struct Case {
    std::string setting;
    EnvironmentSpec spec;
  };
  std::vector<Case> cases = {
      {"continuous_task_agnostic_sl", sl_spec(ScheduleKind::ContinuousDrift)},
      {"discrete_task_agnostic_sl", sl_spec(ScheduleKind::DiscreteChain)},
      {"incremental_sl", sl_spec(ScheduleKind::IncrementalSequence)},
      {"task_incremental_sl", sl_spec(ScheduleKind::IncrementalSequence)},
      {"multi_task_sl", sl_spec(ScheduleKind::StationaryMixture)},
      {"traditional_sl", sl_spec(ScheduleKind::SingleTask, 1)},
      {"continuous_task_agnostic_rl", rl_spec(ScheduleKind::ContinuousDrift)},
      {"discrete_task_agnostic_rl", rl_spec(ScheduleKind::DiscreteChain)},
      {"incremental_rl", rl_spec(ScheduleKind::IncrementalSequence)},
      {"task_incremental_rl", rl_spec(ScheduleKind::IncrementalSequence)},
      {"multi_task_rl", rl_spec(ScheduleKind::StationaryMixture)},
      {"traditional_rl", rl_spec(ScheduleKind::SingleTask, 1)},
  };
  for (const auto& c : cases) {
    CAPTURE(c.setting);
    const AssumptionVector& a = assumptions_of(c.setting);
    auto env = build(c.spec, a);
    Observation obs = env->reset();
    for (int t = 0; t < 160; ++t) {
      CHECK(obs.task_id.has_value() ==
            (a.context_observed == ContextObserved::Observed));
      CHECK(obs.boundary.has_value() ==
            (a.boundary_signal == BoundarySignal::Signaled));
      const bool passive = a.branch == Branch::Passive;
      StepResult res = env->step(t % env->spaces().num_actions);
      CHECK(res.feedback.label.has_value() == passive);
      obs = res.observation;
      if (obs.episode_done) obs = env->reset();
    }
    const MaskStats* stats = wrapper_stats(*env);
    REQUIRE(stats != nullptr);
    CHECK(stats->observations > 160);
    CHECK(stats->violations == 0);
  }
}

TEST_CASE("boundary flag fires exactly at phase changes") {
  auto env = build(sl_spec(ScheduleKind::IncrementalSequence),
                   assumptions_of("incremental_sl"));
  Observation obs = env->reset();
  CHECK(obs.boundary.value() == false);
  std::vector<long long> fired;
  for (int t = 0; t < 150; ++t) {
    obs = env->step(0).observation;
    if (obs.boundary.value()) fired.push_back(env->steps_taken());
  }
  CHECK(fired == std::vector<long long>{50, 100});
}

TEST_CASE("incremental rollout visits each task for exactly its phase") {
  auto env = build(sl_spec(ScheduleKind::IncrementalSequence),
                   assumptions_of("task_incremental_sl"));
  std::map<int, int> counts;
  Observation obs = env->reset();
  for (int t = 0; t < 150; ++t) {
    ++counts[obs.task_id.value()];
    obs = env->step(0).observation;
  }
  CHECK(counts == std::map<int, int>{{0, 50}, {1, 50}, {2, 50}});
}

TEST_CASE("rollouts are bit-identical under the same seed") {
  for (auto spec : {sl_spec(ScheduleKind::IncrementalSequence),
                    rl_spec(ScheduleKind::IncrementalSequence)}) {
    auto a = build(spec, assumptions_of(spec.family == Family::CartPoleVariant
                                            ? "incremental_rl"
                                            : "incremental_sl"));
    auto b = build(spec, assumptions_of(spec.family == Family::CartPoleVariant
                                            ? "incremental_rl"
                                            : "incremental_sl"));
    Observation oa = a->reset(), ob = b->reset();
    for (int t = 0; t < 120; ++t) {
      CHECK(oa.x == ob.x);
      const int action = t % 2;
      auto ra = a->step(action);
      auto rb = b->step(action);
      CHECK(ra.feedback.reward == rb.feedback.reward);
      CHECK(ra.feedback.label == rb.feedback.label);
      oa = ra.observation;
      ob = rb.observation;
      if (oa.episode_done) {
        oa = a->reset();
        ob = b->reset();
      }
    }
  }
}

TEST_CASE("passive streams ignore the action") {
  auto a = build(sl_spec(ScheduleKind::IncrementalSequence),
                 assumptions_of("incremental_sl"));
  auto b = build(sl_spec(ScheduleKind::IncrementalSequence),
                 assumptions_of("incremental_sl"));
  a->reset();
  b->reset();
  for (int t = 0; t < 50; ++t) {
    auto ra = a->step(0);
    auto rb = b->step(1);
    CHECK(ra.observation.x == rb.observation.x);
    CHECK(ra.feedback.label == rb.feedback.label);
  }
}

TEST_CASE("active dynamics do depend on the action") {
  auto a = build(rl_spec(ScheduleKind::SingleTask, 1),
                 assumptions_of("traditional_rl"));
  auto b = build(rl_spec(ScheduleKind::SingleTask, 1),
                 assumptions_of("traditional_rl"));
  a->reset();
  b->reset();
  auto ra = a->step(0);
  auto rb = b->step(1);
  CHECK(ra.observation.x != rb.observation.x);
}

TEST_CASE("wrapper rejects schedule/assumption mismatches") {
  // stationary setting over a sequential schedule
  CHECK_THROWS_AS(build(sl_spec(ScheduleKind::IncrementalSequence),
                        assumptions_of("multi_task_sl")),
                  ConfigError);
  // nonstationary setting over a single task
  CHECK_THROWS_AS(build(sl_spec(ScheduleKind::SingleTask, 1),
                        assumptions_of("incremental_sl")),
                  ConfigError);
  // discrete-context setting over a drift schedule
  CHECK_THROWS_AS(build(sl_spec(ScheduleKind::ContinuousDrift),
                        assumptions_of("discrete_task_agnostic_sl")),
                  ConfigError);
  // branch mismatch
  CHECK_THROWS_AS(build(sl_spec(ScheduleKind::IncrementalSequence),
                        assumptions_of("incremental_rl")),
                  ConfigError);
  // observed context over a drift schedule (no task ids), even unenforced
  CHECK_THROWS_AS(build(sl_spec(ScheduleKind::ContinuousDrift),
                        assumptions_of("task_incremental_sl"), 10, false),
                  ConfigError);
  // abstract settings are not runnable
  CHECK_THROWS_AS(build(sl_spec(ScheduleKind::IncrementalSequence),
                        assumptions_of("incremental")),
                  ConfigError);
  // evaluation-mode wrapping skips only the stationarity check
  CHECK_NOTHROW(build(sl_spec(ScheduleKind::SingleTask, 1),
                      assumptions_of("incremental_sl"), 10, false));
}

TEST_CASE("disjoint actions produce global labels") {
  auto spec = sl_spec(ScheduleKind::IncrementalSequence);
  spec.disjoint_actions = true;
  auto env = build(spec, assumptions_of("task_incremental_sl"));
  CHECK(env->spaces().num_actions == 6);  // 3 tasks x 2 classes
  Observation obs = env->reset();
  for (int t = 0; t < 150; ++t) {
    const int task = obs.task_id.value();
    auto res = env->step(0);
    const int label = res.feedback.label.value();
    CHECK(label >= task * 2);
    CHECK(label < (task + 1) * 2);
    obs = res.observation;
  }
}

TEST_CASE("disjoint actions are rejected on the active branch") {
  auto spec = rl_spec(ScheduleKind::IncrementalSequence);
  spec.disjoint_actions = true;
  CHECK_THROWS_AS(FamilyHandle::load(spec, 1), ConfigError);
}

TEST_CASE("gridworld env steps through layouts") {
  EnvironmentSpec spec;
  spec.family = Family::MultiLayoutGridworld;
  spec.schedule_kind = ScheduleKind::IncrementalSequence;
  spec.num_tasks = 3;
  spec.steps_per_phase = 40;
  auto env = build(spec, assumptions_of("incremental_rl"));
  Observation obs = env->reset();
  CHECK(obs.x.size() == 44);  // 4 x 11 grid
  int episodes = 0;
  for (int t = 0; t < 120; ++t) {
    auto res = env->step(3);
    obs = res.observation;
    if (obs.episode_done) {
      ++episodes;
      obs = env->reset();
    }
  }
  CHECK(episodes > 0);  // the episode cap guarantees at least one reset
}
