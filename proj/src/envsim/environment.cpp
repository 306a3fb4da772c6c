#include "cl/envsim/environment.hpp"

#include <algorithm>
#include <cmath>

#include "cl/envsim/cartpole.hpp"
#include "cl/envsim/synthetic.hpp"
#include "cl/errors.hpp"

namespace cl {

Branch family_branch(Family family) {
  switch (family) {
    case Family::SyntheticGaussianSL:
    case Family::SplitCsvSL:
      return Branch::Passive;
    case Family::CartPoleVariant:
    case Family::MultiLayoutGridworld:
      return Branch::Active;
  }
  return Branch::Passive;
}

std::string family_to_string(Family family) {
  switch (family) {
    case Family::SyntheticGaussianSL: return "synthetic_gaussian";
    case Family::SplitCsvSL: return "split_csv";
    case Family::CartPoleVariant: return "cartpole";
    case Family::MultiLayoutGridworld: return "gridworld";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "synthetic_gaussian") return Family::SyntheticGaussianSL;
  if (s == "split_csv") return Family::SplitCsvSL;
  if (s == "cartpole") return Family::CartPoleVariant;
  if (s == "gridworld") return Family::MultiLayoutGridworld;
  throw ConfigError(ConfigError::Code::MalformedField, "unknown family: " + s);
}

std::string schedule_kind_to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::ContinuousDrift: return "continuous_drift";
    case ScheduleKind::DiscreteChain: return "discrete_chain";
    case ScheduleKind::IncrementalSequence: return "incremental_sequence";
    case ScheduleKind::StationaryMixture: return "stationary_mixture";
    case ScheduleKind::SingleTask: return "single_task";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "continuous_drift") return ScheduleKind::ContinuousDrift;
  if (s == "discrete_chain") return ScheduleKind::DiscreteChain;
  if (s == "incremental_sequence") return ScheduleKind::IncrementalSequence;
  if (s == "stationary_mixture") return ScheduleKind::StationaryMixture;
  if (s == "single_task") return ScheduleKind::SingleTask;
  throw ConfigError(ConfigError::Code::MalformedField,
                    "unknown schedule kind: " + s);
}

void to_json(nlohmann::json& j, const EnvironmentSpec& spec) {
  j = nlohmann::json{
      {"family", family_to_string(spec.family)},
      {"schedule", schedule_kind_to_string(spec.schedule_kind)},
      {"num_tasks", spec.num_tasks},
      {"steps_per_phase", spec.steps_per_phase},
      {"disjoint_actions", spec.disjoint_actions},
      {"classes_per_task", spec.classes_per_task},
      {"feature_dim", spec.feature_dim},
      {"noise_sigma", spec.noise_sigma},
      {"dataset_path", spec.dataset_path},
      {"layout_dir", spec.layout_dir},
      {"max_episode_len", spec.max_episode_len}};
}

void from_json(const nlohmann::json& j, EnvironmentSpec& spec) {
  EnvironmentSpec defaults;
  spec.family = family_from_string(
      j.value("family", family_to_string(defaults.family)));
  spec.schedule_kind = schedule_kind_from_string(
      j.value("schedule", schedule_kind_to_string(defaults.schedule_kind)));
  spec.num_tasks = j.value("num_tasks", defaults.num_tasks);
  spec.steps_per_phase = j.value("steps_per_phase", defaults.steps_per_phase);
  spec.disjoint_actions = j.value("disjoint_actions", defaults.disjoint_actions);
  spec.classes_per_task = j.value("classes_per_task", defaults.classes_per_task);
  spec.feature_dim = j.value("feature_dim", defaults.feature_dim);
  spec.noise_sigma = j.value("noise_sigma", defaults.noise_sigma);
  spec.dataset_path = j.value("dataset_path", defaults.dataset_path);
  spec.layout_dir = j.value("layout_dir", defaults.layout_dir);
  spec.max_episode_len = j.value("max_episode_len", defaults.max_episode_len);
}

std::shared_ptr<const FamilyHandle> FamilyHandle::load(
    const EnvironmentSpec& spec, std::uint64_t seed) {
  auto handle = std::make_shared<FamilyHandle>();
  handle->spec = spec;
  if (handle->spec.max_episode_len <= 0) {
    handle->spec.max_episode_len =
        spec.family == Family::CartPoleVariant ? 200 : 100;
  }
  if (spec.disjoint_actions && family_branch(spec.family) != Branch::Passive) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "disjoint_actions is only valid for passive families");
  }
  if (spec.disjoint_actions &&
      spec.schedule_kind == ScheduleKind::ContinuousDrift) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "disjoint_actions requires discrete tasks");
  }
  switch (spec.family) {
    case Family::SyntheticGaussianSL:
      if (spec.feature_dim < spec.classes_per_task) {
        throw ConfigError(ConfigError::Code::BadEnvironment,
                          "feature_dim must be >= classes_per_task");
      }
      break;
    case Family::SplitCsvSL: {
      if (spec.dataset_path.empty()) {
        throw ConfigError(ConfigError::Code::BadEnvironment,
                          "split_csv family needs dataset_path");
      }
      Dataset full = load_csv_dataset(spec.dataset_path);
      handle->csv_tasks = split_by_class(full, spec.num_tasks, seed);
      break;
    }
    case Family::CartPoleVariant:
      break;
    case Family::MultiLayoutGridworld: {
      handle->layouts = spec.layout_dir.empty()
                            ? builtin_layouts()
                            : load_layout_dir(spec.layout_dir);
      for (const auto& l : handle->layouts) {
        if (l.rows != handle->layouts[0].rows ||
            l.cols != handle->layouts[0].cols) {
          throw ConfigError(ConfigError::Code::BadEnvironment,
                            "all layouts must share the same grid size");
        }
      }
      if (spec.num_tasks > static_cast<int>(handle->layouts.size())) {
        throw ConfigError(
            ConfigError::Code::BadEnvironment,
            "num_tasks exceeds available layouts (" +
                std::to_string(handle->layouts.size()) + ")");
      }
      break;
    }
  }
  return handle;
}

TaskSampler FamilyHandle::task_sampler() const {
  switch (spec.family) {
    case Family::SyntheticGaussianSL:
      return synthetic_task_sampler(spec.classes_per_task, spec.feature_dim);
    case Family::SplitCsvSL: {
      TaskSampler sampler;
      sampler.continuous = false;
      sampler.sample = [](int task, Rng&) {
        return std::vector<double>{static_cast<double>(task)};
      };
      return sampler;
    }
    case Family::CartPoleVariant:
      return cartpole_task_sampler();
    case Family::MultiLayoutGridworld:
      return gridworld_task_sampler(static_cast<int>(layouts.size()));
  }
  return {};
}

int FamilyHandle::observation_dim() const {
  switch (spec.family) {
    case Family::SyntheticGaussianSL: return spec.feature_dim;
    case Family::SplitCsvSL: return csv_tasks.at(0).feature_dim;
    case Family::CartPoleVariant: return 4;
    case Family::MultiLayoutGridworld:
      return layouts.at(0).rows * layouts.at(0).cols;
  }
  return 0;
}

int FamilyHandle::actions_per_task() const {
  switch (spec.family) {
    case Family::SyntheticGaussianSL: return spec.classes_per_task;
    case Family::SplitCsvSL: return csv_tasks.at(0).num_classes / spec.num_tasks;
    case Family::CartPoleVariant: return 2;
    case Family::MultiLayoutGridworld: return kGridActions;
  }
  return 0;
}

SpaceInfo FamilyHandle::space_info() const {
  SpaceInfo info;
  info.observation_dim = observation_dim();
  info.actions_per_task = actions_per_task();
  info.disjoint_actions = spec.disjoint_actions;
  info.num_tasks = spec.num_tasks;
  info.branch = branch();
  info.num_actions = spec.disjoint_actions
                         ? info.actions_per_task * spec.num_tasks
                         : info.actions_per_task;
  return info;
}

ContextSchedule make_schedule_for(const FamilyHandle& handle,
                                  std::uint64_t seed) {
  return make_schedule(handle.spec.schedule_kind, handle.spec.num_tasks,
                       handle.spec.steps_per_phase, handle.task_sampler(),
                       seed);
}

namespace {

bool boundary_at(const ContextSchedule& schedule, long long step) {
  if (schedule_kind_stationary(schedule.kind)) return false;
  if (step <= 0) return false;
  return phase_at(schedule, step) != phase_at(schedule, step - 1);
}

// Labeled sample stream; the action never influences the next draw.
class PassiveStreamEnv final : public Environment {
 public:
  PassiveStreamEnv(std::shared_ptr<const FamilyHandle> handle,
                   ContextSchedule schedule, std::uint64_t env_seed,
                   EnvRole role)
      : handle_(std::move(handle)),
        schedule_(std::move(schedule)),
        rng_(env_seed),
        role_(role),
        spaces_(handle_->space_info()) {
    spaces_.num_tasks = schedule_.num_tasks;
    if (handle_->spec.family == Family::SplitCsvSL) prepare_partitions();
  }

  Observation reset() override {
    if (!has_current_) generate();
    return current_;
  }

  StepResult step(int action) override {
    if (!has_current_) generate();
    Feedback fb;
    fb.label = emitted_label_;
    fb.reward = action == emitted_label_ ? 1.0 : 0.0;
    ++steps_;
    generate();
    return {current_, fb};
  }

  const SpaceInfo& spaces() const override { return spaces_; }
  ScheduleKind schedule_kind() const override { return schedule_.kind; }
  long long steps_taken() const override { return steps_; }

 private:
  void prepare_partitions() {
    // per-task row ranges by role; rows were shuffled at split time
    for (const auto& task : handle_->csv_tasks) {
      const std::size_t n = task.size();
      std::size_t lo = 0, hi = n;
      const auto cut = [&](double f) { return static_cast<std::size_t>(f * n); };
      switch (role_) {
        case EnvRole::Train: lo = 0; hi = cut(0.7); break;
        case EnvRole::Valid: lo = cut(0.7); hi = cut(0.85); break;
        case EnvRole::Test: lo = cut(0.85); hi = n; break;
      }
      if (lo >= hi) {
        throw ConfigError(ConfigError::Code::BadEnvironment,
                          "csv task too small for a train/valid/test split");
      }
      partitions_.emplace_back(lo, hi);
    }
  }

  void generate() {
    const ContextVector ctx = context_at(schedule_, steps_);
    Observation obs;
    int local = 0;
    int task = ctx.task_index.value_or(0);
    switch (handle_->spec.family) {
      case Family::SyntheticGaussianSL: {
        auto [x, cls] = sample_passive_synthetic(
            ctx, handle_->spec.classes_per_task, handle_->spec.feature_dim,
            handle_->spec.noise_sigma, rng_);
        obs.x = std::move(x);
        local = cls;
        break;
      }
      case Family::SplitCsvSL: {
        // task index selects the dataset; csv rows carry global labels
        const Dataset& data = handle_->csv_tasks[task];
        const auto [lo, hi] = partitions_[task];
        const std::size_t row =
            lo + static_cast<std::size_t>(
                     rng_.uniform_int(static_cast<int>(hi - lo)));
        obs.x = data.features[row];
        local = data.labels[row] - task * handle_->actions_per_task();
        break;
      }
      default:
        throw ConfigError(ConfigError::Code::BadEnvironment,
                          "passive stream over an active family");
    }
    emitted_label_ = handle_->spec.disjoint_actions
                         ? task * handle_->actions_per_task() + local
                         : local;
    obs.task_id = ctx.task_index;
    obs.boundary = boundary_at(schedule_, steps_);
    obs.episode_done = false;
    current_ = std::move(obs);
    has_current_ = true;
  }

  std::shared_ptr<const FamilyHandle> handle_;
  ContextSchedule schedule_;
  Rng rng_;
  EnvRole role_;
  SpaceInfo spaces_;
  std::vector<std::pair<std::size_t, std::size_t>> partitions_;
  Observation current_;
  int emitted_label_ = 0;
  long long steps_ = 0;
  bool has_current_ = false;
};

class CartPoleEnv final : public Environment {
 public:
  CartPoleEnv(std::shared_ptr<const FamilyHandle> handle,
              ContextSchedule schedule, std::uint64_t env_seed)
      : handle_(std::move(handle)),
        schedule_(std::move(schedule)),
        rng_(env_seed),
        spaces_(handle_->space_info()) {
    spaces_.num_tasks = schedule_.num_tasks;
  }

  Observation reset() override {
    state_.x = rng_.uniform(-0.05, 0.05);
    state_.x_dot = rng_.uniform(-0.05, 0.05);
    state_.theta = rng_.uniform(-0.05, 0.05);
    state_.theta_dot = rng_.uniform(-0.05, 0.05);
    ep_steps_ = 0;
    if (schedule_.kind == ScheduleKind::StationaryMixture) {
      episode_context_ =
          schedule_.anchors[rng_.uniform_int(schedule_.num_tasks)];
    }
    return observe(false);
  }

  StepResult step(int action) override {
    const ContextVector ctx = current_context();
    auto out = step_cartpole(state_, action, ctx);
    state_ = out.next;
    ++steps_;
    ++ep_steps_;
    const bool done =
        out.done || ep_steps_ >= handle_->spec.max_episode_len;
    StepResult result;
    result.observation = observe(done);
    result.feedback.reward = out.reward;
    return result;
  }

  const SpaceInfo& spaces() const override { return spaces_; }
  ScheduleKind schedule_kind() const override { return schedule_.kind; }
  long long steps_taken() const override { return steps_; }

 private:
  ContextVector current_context() const {
    if (schedule_.kind == ScheduleKind::StationaryMixture)
      return episode_context_;
    return context_at(schedule_, steps_);
  }

  Observation observe(bool done) {
    const ContextVector ctx = current_context();
    Observation obs;
    obs.x = {state_.x, state_.x_dot, state_.theta, state_.theta_dot};
    obs.task_id = ctx.task_index;
    obs.boundary = boundary_at(schedule_, steps_);
    obs.episode_done = done;
    return obs;
  }

  std::shared_ptr<const FamilyHandle> handle_;
  ContextSchedule schedule_;
  Rng rng_;
  SpaceInfo spaces_;
  CartPoleState state_;
  ContextVector episode_context_;
  long long steps_ = 0;
  int ep_steps_ = 0;
};

class GridworldEnv final : public Environment {
 public:
  GridworldEnv(std::shared_ptr<const FamilyHandle> handle,
               ContextSchedule schedule, std::uint64_t env_seed)
      : handle_(std::move(handle)),
        schedule_(std::move(schedule)),
        rng_(env_seed),
        spaces_(handle_->space_info()) {
    spaces_.num_tasks = schedule_.num_tasks;
  }

  Observation reset() override {
    if (schedule_.kind == ScheduleKind::StationaryMixture) {
      episode_context_ =
          schedule_.anchors[rng_.uniform_int(schedule_.num_tasks)];
    }
    const GridLayout& layout = current_layout();
    state_ = GridState{layout.start_r, layout.start_c, 0u, 0};
    return observe(false);
  }

  StepResult step(int action) override {
    const ContextVector ctx = current_context();
    auto out = step_gridworld(state_, action, ctx, handle_->layouts,
                              handle_->spec.max_episode_len);
    state_ = out.next;
    ++steps_;
    StepResult result;
    result.observation = observe(out.done);
    result.feedback.reward = out.reward;
    return result;
  }

  const SpaceInfo& spaces() const override { return spaces_; }
  ScheduleKind schedule_kind() const override { return schedule_.kind; }
  long long steps_taken() const override { return steps_; }

 private:
  ContextVector current_context() const {
    if (schedule_.kind == ScheduleKind::StationaryMixture)
      return episode_context_;
    return context_at(schedule_, steps_);
  }

  const GridLayout& current_layout() const {
    return handle_->layouts[layout_index_of(current_context(),
                                            handle_->layouts)];
  }

  Observation observe(bool done) {
    const ContextVector ctx = current_context();
    Observation obs;
    obs.x = gridworld_observation(state_, current_layout());
    obs.task_id = ctx.task_index;
    obs.boundary = boundary_at(schedule_, steps_);
    obs.episode_done = done;
    return obs;
  }

  std::shared_ptr<const FamilyHandle> handle_;
  ContextSchedule schedule_;
  Rng rng_;
  SpaceInfo spaces_;
  GridState state_;
  ContextVector episode_context_;
  long long steps_ = 0;
};

class SettingWrapper final : public Environment {
 public:
  SettingWrapper(std::unique_ptr<Environment> inner,
                 const AssumptionVector& assumptions)
      : inner_(std::move(inner)), assumptions_(assumptions) {}

  Observation reset() override { return mask(inner_->reset()); }

  StepResult step(int action) override {
    StepResult result = inner_->step(action);
    result.observation = mask(std::move(result.observation));
    return result;
  }

  const SpaceInfo& spaces() const override { return inner_->spaces(); }
  ScheduleKind schedule_kind() const override {
    return inner_->schedule_kind();
  }
  long long steps_taken() const override { return inner_->steps_taken(); }

  const MaskStats& stats() const { return stats_; }

 private:
  Observation mask(Observation obs) {
    ++stats_.observations;
    if (assumptions_.context_observed == ContextObserved::Observed) {
      if (!obs.task_id) ++stats_.violations;
    } else {
      obs.task_id.reset();
    }
    if (assumptions_.boundary_signal == BoundarySignal::Signaled) {
      if (!obs.boundary) ++stats_.violations;
    } else {
      obs.boundary.reset();
    }
    return obs;
  }

  std::unique_ptr<Environment> inner_;
  AssumptionVector assumptions_;
  MaskStats stats_;
};

}  // namespace

std::unique_ptr<Environment> make_base_environment(
    std::shared_ptr<const FamilyHandle> handle, ContextSchedule schedule,
    std::uint64_t env_seed, EnvRole role) {
  switch (handle->spec.family) {
    case Family::SyntheticGaussianSL:
    case Family::SplitCsvSL:
      return std::make_unique<PassiveStreamEnv>(std::move(handle),
                                                std::move(schedule), env_seed,
                                                role);
    case Family::CartPoleVariant:
      return std::make_unique<CartPoleEnv>(std::move(handle),
                                           std::move(schedule), env_seed);
    case Family::MultiLayoutGridworld:
      return std::make_unique<GridworldEnv>(std::move(handle),
                                            std::move(schedule), env_seed);
  }
  throw ConfigError(ConfigError::Code::BadEnvironment, "unknown family");
}

std::unique_ptr<Environment> wrap_for_setting(
    std::unique_ptr<Environment> env, const AssumptionVector& assumptions,
    bool enforce_schedule) {
  if (!is_valid(assumptions) || assumptions.is_abstract()) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "wrapped settings must be valid and concrete");
  }
  if (env->spaces().branch != assumptions.branch) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "environment family branch does not match the setting");
  }
  const ScheduleKind kind = env->schedule_kind();
  if (assumptions.context_observed == ContextObserved::Observed &&
      kind == ScheduleKind::ContinuousDrift) {
    throw ConfigError(ConfigError::Code::BadEnvironment,
                      "context_observed settings need discrete task ids");
  }
  if (enforce_schedule) {
    const bool stationary_setting =
        assumptions.stationarity == Stationarity::Stationary;
    if (stationary_setting != schedule_kind_stationary(kind)) {
      throw ConfigError(ConfigError::Code::BadEnvironment,
                        "schedule kind does not match the setting's "
                        "stationarity assumption");
    }
    if (assumptions.context_continuity == ContextContinuity::Discrete &&
        kind == ScheduleKind::ContinuousDrift) {
      throw ConfigError(ConfigError::Code::BadEnvironment,
                        "discrete-context settings cannot run a drift "
                        "schedule");
    }
  }
  return std::make_unique<SettingWrapper>(std::move(env), assumptions);
}

const MaskStats* wrapper_stats(const Environment& env) {
  if (const auto* wrapper = dynamic_cast<const SettingWrapper*>(&env)) {
    return &wrapper->stats();
  }
  return nullptr;
}

}  // namespace cl
