#include "cl/envsim/schedule.hpp"

#include <algorithm>

#include "cl/errors.hpp"

namespace cl {

bool schedule_kind_stationary(ScheduleKind kind) {
  return kind == ScheduleKind::StationaryMixture ||
         kind == ScheduleKind::SingleTask;
}

ContextSchedule make_schedule(ScheduleKind kind, int num_tasks,
                              long long steps_per_phase,
                              const TaskSampler& sampler, std::uint64_t seed) {
  if (num_tasks < 1) {
    throw ConfigError(ConfigError::Code::BadEnvironment, "num_tasks must be >= 1");
  }
  if (steps_per_phase <= 0) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "steps_per_phase must be > 0");
  }
  if (kind == ScheduleKind::ContinuousDrift && !sampler.continuous) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "continuous drift requires a family with continuous "
                      "task parameters");
  }
  if (kind == ScheduleKind::SingleTask && num_tasks != 1) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "single-task schedule requires num_tasks == 1");
  }

  ContextSchedule schedule;
  schedule.kind = kind;
  schedule.num_tasks = num_tasks;
  schedule.steps_per_phase = steps_per_phase;
  schedule.seed = seed;

  Rng anchor_rng = Rng(seed).split("task_sampler");
  const bool discrete = kind != ScheduleKind::ContinuousDrift;
  for (int k = 0; k < num_tasks; ++k) {
    ContextVector anchor;
    anchor.values = sampler.sample(k, anchor_rng);
    if (discrete) anchor.task_index = k;
    schedule.anchors.push_back(std::move(anchor));
  }

  switch (kind) {
    case ScheduleKind::ContinuousDrift:
    case ScheduleKind::IncrementalSequence:
      for (int k = 0; k < num_tasks; ++k) schedule.phase_sequence.push_back(k);
      break;
    case ScheduleKind::DiscreteChain: {
      // uniform switching chain over the other tasks
      schedule.transition.assign(
          num_tasks, std::vector<double>(num_tasks,
                                         num_tasks > 1
                                             ? 1.0 / (num_tasks - 1)
                                             : 0.0));
      for (int k = 0; k < num_tasks; ++k) {
        schedule.transition[k][k] = num_tasks > 1 ? 0.0 : 1.0;
      }
      Rng chain_rng = Rng(seed).split("chain");
      int current = 0;
      schedule.phase_sequence.push_back(current);
      for (int p = 1; p < num_tasks; ++p) {
        double u = chain_rng.uniform();
        double acc = 0.0;
        int next = current;
        for (int k = 0; k < num_tasks; ++k) {
          acc += schedule.transition[current][k];
          if (u < acc) {
            next = k;
            break;
          }
        }
        schedule.phase_sequence.push_back(next);
        current = next;
      }
      break;
    }
    case ScheduleKind::StationaryMixture:
    case ScheduleKind::SingleTask:
      schedule.phase_sequence.push_back(0);
      break;
  }
  return schedule;
}

int phase_at(const ContextSchedule& schedule, long long step) {
  const long long last =
      static_cast<long long>(schedule.phase_sequence.size()) - 1;
  if (schedule_kind_stationary(schedule.kind)) return 0;
  long long phase = step / schedule.steps_per_phase;
  return static_cast<int>(std::min(phase, std::max<long long>(last, 0)));
}

ContextVector context_at(const ContextSchedule& schedule, long long step) {
  switch (schedule.kind) {
    case ScheduleKind::SingleTask:
      return schedule.anchors[0];
    case ScheduleKind::StationaryMixture: {
      // i.i.d. task per step, hash-indexed so it is a pure function
      std::uint64_t h = Rng::mix(schedule.seed ^ Rng::mix(
                                     static_cast<std::uint64_t>(step) +
                                     0x6d69787475726533ULL));
      return schedule.anchors[h % schedule.anchors.size()];
    }
    case ScheduleKind::IncrementalSequence:
    case ScheduleKind::DiscreteChain:
      return schedule.anchors[schedule.phase_sequence[phase_at(schedule, step)]];
    case ScheduleKind::ContinuousDrift: {
      const long long P = schedule.steps_per_phase;
      const long long k = step / P;
      const long long last = schedule.num_tasks - 1;
      if (k >= last) return schedule.anchors[last];
      const double alpha = static_cast<double>(step % P) / static_cast<double>(P);
      ContextVector out;
      out.values.resize(schedule.anchors[k].values.size());
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = (1.0 - alpha) * schedule.anchors[k].values[i] +
                        alpha * schedule.anchors[k + 1].values[i];
      }
      return out;
    }
  }
  return schedule.anchors[0];
}

ContextSchedule pinned_schedule(const ContextSchedule& schedule, int task) {
  if (task < 0 || task >= schedule.num_tasks) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "pinned task out of range");
  }
  ContextSchedule pinned;
  pinned.kind = ScheduleKind::SingleTask;
  pinned.num_tasks = 1;
  pinned.steps_per_phase = schedule.steps_per_phase;
  pinned.anchors.push_back(schedule.anchors[task]);
  pinned.phase_sequence.push_back(0);
  pinned.seed = schedule.seed;
  return pinned;
}

}  // namespace cl
