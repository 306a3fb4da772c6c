#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/envsim/csv_dataset.hpp"
#include "cl/envsim/gridworld.hpp"
#include "cl/envsim/schedule.hpp"
#include "cl/taxonomy.hpp"

namespace cl {

struct Observation {
  std::vector<double> x;
  std::optional<int> task_id;       // present iff context_observed = Observed
  std::optional<bool> boundary;     // present iff boundary_signal = Signaled
  bool episode_done = false;
};

struct Feedback {
  double reward = 0.0;
  std::optional<int> label;  // present iff branch = Passive
};

struct StepResult {
  Observation observation;
  Feedback feedback;
};

struct SpaceInfo {
  int observation_dim = 0;
  int num_actions = 0;       // global action/label space
  int actions_per_task = 0;  // per-task block when disjoint_actions
  bool disjoint_actions = false;
  int num_tasks = 1;
  Branch branch = Branch::Passive;
};

// Step-based interaction surface shared by the passive (labeled stream)
// and active (reward, action-dependent dynamics) worlds.  Instances are
// single-owner; distinct instances may run on distinct threads.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Observation reset() = 0;
  virtual StepResult step(int action) = 0;
  virtual const SpaceInfo& spaces() const = 0;
  virtual ScheduleKind schedule_kind() const = 0;
  virtual long long steps_taken() const = 0;
};

enum class Family {
  SyntheticGaussianSL,
  SplitCsvSL,
  CartPoleVariant,
  MultiLayoutGridworld,
};

Branch family_branch(Family family);
std::string family_to_string(Family family);
Family family_from_string(const std::string& s);
std::string schedule_kind_to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

struct EnvironmentSpec {
  Family family = Family::SyntheticGaussianSL;
  ScheduleKind schedule_kind = ScheduleKind::IncrementalSequence;
  int num_tasks = 5;
  long long steps_per_phase = 200;
  bool disjoint_actions = false;
  int classes_per_task = 2;    // synthetic
  int feature_dim = 16;        // synthetic
  double noise_sigma = 0.15;   // synthetic
  std::string dataset_path;    // split_csv
  std::string layout_dir;      // gridworld; empty = built-in layouts
  int max_episode_len = 0;     // 0 = family default (200 cartpole, 100 grid)

  bool operator==(const EnvironmentSpec&) const = default;
};

void to_json(nlohmann::json& j, const EnvironmentSpec& spec);
void from_json(const nlohmann::json& j, EnvironmentSpec& spec);

enum class EnvRole { Train, Valid, Test };

// Loaded family data (csv split, layouts) shared by the environments of
// one run.
class FamilyHandle {
 public:
  static std::shared_ptr<const FamilyHandle> load(const EnvironmentSpec& spec,
                                                  std::uint64_t seed);

  EnvironmentSpec spec;  // with family defaults filled in
  std::vector<Dataset> csv_tasks;
  std::vector<GridLayout> layouts;

  Branch branch() const { return family_branch(spec.family); }
  TaskSampler task_sampler() const;
  int observation_dim() const;
  int actions_per_task() const;
  SpaceInfo space_info() const;
};

ContextSchedule make_schedule_for(const FamilyHandle& handle,
                                  std::uint64_t seed);

// Unmasked environment: observations carry the task id whenever the
// schedule defines one and a boundary flag at every phase change.
std::unique_ptr<Environment> make_base_environment(
    std::shared_ptr<const FamilyHandle> handle, ContextSchedule schedule,
    std::uint64_t env_seed, EnvRole role);

struct MaskStats {
  long long observations = 0;
  long long violations = 0;
};

// Masks task_id / boundary per the assumption vector and validates that
// the schedule matches the setting (branch, stationarity, continuity).
// enforce_schedule=false skips the stationarity check, used for held-out
// evaluation environments pinned to one context.
std::unique_ptr<Environment> wrap_for_setting(std::unique_ptr<Environment> env,
                                              const AssumptionVector& assumptions,
                                              bool enforce_schedule = true);

// Stats of a wrap_for_setting environment, nullptr otherwise.
const MaskStats* wrapper_stats(const Environment& env);

}  // namespace cl
