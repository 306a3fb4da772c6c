#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cl/rng.hpp"

namespace cl {

struct ContextVector {
  std::vector<double> values;
  std::optional<int> task_index;  // defined only for discrete schedules
};

enum class ScheduleKind {
  ContinuousDrift,
  DiscreteChain,
  IncrementalSequence,
  StationaryMixture,
  SingleTask,
};

bool schedule_kind_stationary(ScheduleKind kind);

// Realization of the context chain: anchors are per-task parameter
// vectors, phase_sequence the task visited in each phase (discrete
// kinds), transition the chain matrix used to draw it.
struct ContextSchedule {
  ScheduleKind kind = ScheduleKind::SingleTask;
  int num_tasks = 1;
  long long steps_per_phase = 1;
  std::vector<ContextVector> anchors;
  std::vector<int> phase_sequence;
  std::vector<std::vector<double>> transition;
  std::uint64_t seed = 0;
};

// Per-family task sampling used to draw anchors.
struct TaskSampler {
  std::function<std::vector<double>(int task, Rng&)> sample;
  bool continuous = false;  // anchors may be interpolated between
};

// Anchors drawn deterministically from the seed; same inputs give the
// identical schedule.  Rejects ContinuousDrift when the sampler has no
// continuous task parameters.
ContextSchedule make_schedule(ScheduleKind kind, int num_tasks,
                              long long steps_per_phase,
                              const TaskSampler& sampler, std::uint64_t seed);

// Context at a step.  Drift interpolates linearly between consecutive
// anchors; discrete kinds hold the phase's anchor; past the final phase
// the context clamps to the last anchor.  StationaryMixture redraws a
// task per step from the seed.
ContextVector context_at(const ContextSchedule& schedule, long long step);

// Phase index at a step (clamped to the last phase).
int phase_at(const ContextSchedule& schedule, long long step);

// A single-task schedule pinned to anchor `task` of `schedule`; used to
// build held-out evaluation environments.
ContextSchedule pinned_schedule(const ContextSchedule& schedule, int task);

}  // namespace cl
