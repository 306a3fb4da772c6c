#include "cl/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "cl/errors.hpp"

namespace cl {

double final_performance(const TransferMatrix& matrix) {
  double sum = 0.0;
  for (int j = 0; j < matrix.cols; ++j) sum += matrix.at(matrix.rows - 1, j);
  return sum / matrix.cols;
}

std::optional<double> backward_transfer(const TransferMatrix& matrix) {
  if (matrix.rows != matrix.cols || matrix.cols < 2) return std::nullopt;
  const int T = matrix.cols;
  double sum = 0.0;
  for (int j = 0; j < T - 1; ++j) {
    sum += matrix.at(T - 1, j) - matrix.at(j, j);
  }
  return sum / (T - 1);
}

std::optional<double> forward_transfer(const TransferMatrix& matrix,
                                       const std::vector<double>& baseline) {
  if (matrix.rows != matrix.cols || matrix.cols < 2) return std::nullopt;
  const int T = matrix.cols;
  double sum = 0.0;
  for (int j = 1; j < T; ++j) {
    sum += matrix.at(j - 1, j) - baseline[j];
  }
  return sum / (T - 1);
}

double online_performance(const OnlineCurve& curve) {
  if (curve.empty()) {
    throw RunError("online_performance on an empty curve");
  }
  double sum = 0.0;
  for (const auto& [step, value] : curve) {
    (void)step;
    sum += value;
  }
  return sum / static_cast<double>(curve.size());
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t extra) {
  return Rng(seed).split(tag).split(extra).next_u64();
}

double evaluate_policy(Method& method, Environment& env, Branch branch) {
  if (branch == Branch::Passive) {
    Observation obs = env.reset();
    double correct = 0.0;
    for (int i = 0; i < kSlTestSamples; ++i) {
      const int action = method.act(obs);
      StepResult res = env.step(action);
      correct += res.feedback.reward;
      obs = res.observation;
    }
    return correct / kSlTestSamples;
  }
  double total = 0.0;
  for (int ep = 0; ep < kRlTestEpisodes; ++ep) {
    Observation obs = env.reset();
    double ret = 0.0;
    while (true) {
      const int action = method.act(obs);
      StepResult res = env.step(action);
      ret += res.feedback.reward;
      if (res.observation.episode_done) break;
      obs = res.observation;
    }
    total += ret;
  }
  return total / kRlTestEpisodes;
}

double random_policy_return(Environment& env, std::uint64_t seed) {
  Rng rng(seed);
  const int actions = env.spaces().num_actions;
  double total = 0.0;
  for (int ep = 0; ep < kRlTestEpisodes; ++ep) {
    Observation obs = env.reset();
    double ret = 0.0;
    while (true) {
      StepResult res = env.step(rng.uniform_int(actions));
      ret += res.feedback.reward;
      if (res.observation.episode_done) break;
      obs = res.observation;
    }
    total += ret;
  }
  return total / kRlTestEpisodes;
}

void absorb_mask_stats(const Environment& env, RunDiagnostics& diag) {
  if (const MaskStats* stats = wrapper_stats(env)) {
    diag.mask_observations += stats->observations;
    diag.mask_violations += stats->violations;
  }
}

}  // namespace

Results apply(const SettingInstance& setting, const MethodDescriptor& method,
              std::uint64_t seed, const nlohmann::json& config_echo) {
  MethodFactory factory = [&method](const SettingContext& ctx) {
    return std::make_unique<MethodInstance>(
        MethodInstance::configure(method, ctx));
  };
  return apply_with_factory(setting, method, factory, seed, config_echo);
}

Results apply_with_factory(const SettingInstance& setting,
                           const MethodDescriptor& method,
                           const MethodFactory& factory, std::uint64_t seed,
                           const nlohmann::json& config_echo) {
  const auto t0 = std::chrono::steady_clock::now();
  const AssumptionVector& assumptions = setting.node.assumptions;
  if (assumptions.is_abstract()) {
    throw ConfigError(ConfigError::Code::NotApplicable,
                      "setting '" + setting.node.name + "' is abstract");
  }
  if (!is_applicable(method, assumptions)) {
    throw ConfigError(
        ConfigError::Code::NotApplicable,
        "method '" + method.name + "' does not apply to setting '" +
            setting.node.name + "': failing axis " +
            failing_axis(method.target, assumptions));
  }

  auto handle = FamilyHandle::load(setting.env, seed);
  ContextSchedule schedule = make_schedule_for(*handle, seed);

  SettingContext ctx;
  ctx.setting_name = setting.node.name;
  ctx.assumptions = assumptions;
  ctx.spaces = handle->space_info();
  ctx.steps_per_phase = handle->spec.steps_per_phase;
  ctx.family = handle->spec.family;
  ctx.seed = seed;
  std::unique_ptr<Method> learner = factory(ctx);

  const Branch branch = ctx.spaces.branch;
  const bool stationary =
      assumptions.stationarity == Stationarity::Stationary;
  const bool signaled =
      assumptions.boundary_signal == BoundarySignal::Signaled;
  const bool observed =
      assumptions.context_observed == ContextObserved::Observed;
  const int num_tasks = schedule.num_tasks;
  const int rows = stationary
                       ? 1
                       : static_cast<int>(schedule.phase_sequence.size());
  const long long phase_budget =
      stationary ? handle->spec.steps_per_phase * num_tasks
                 : handle->spec.steps_per_phase;

  Results results;
  results.seed = seed;
  results.config = config_echo;
  results.matrix = TransferMatrix(
      rows, num_tasks,
      branch == Branch::Passive ? "accuracy" : "mean_episode_return");

  // per-task chance reference for forward transfer
  for (int j = 0; j < num_tasks; ++j) {
    if (branch == Branch::Passive) {
      const int space = (ctx.spaces.disjoint_actions && observed)
                            ? ctx.spaces.actions_per_task
                            : ctx.spaces.num_actions;
      results.chance_baseline.push_back(1.0 / space);
    } else {
      auto env = wrap_for_setting(
          make_base_environment(handle, pinned_schedule(schedule, j),
                                derive_seed(seed, "baseline_env", j),
                                EnvRole::Test),
          assumptions, /*enforce_schedule=*/false);
      results.chance_baseline.push_back(
          random_policy_return(*env, derive_seed(seed, "baseline_policy", j)));
      absorb_mask_stats(*env, results.diagnostics);
    }
  }

  auto train_env = wrap_for_setting(
      make_base_environment(handle, schedule,
                            derive_seed(seed, "train_env", 0), EnvRole::Train),
      assumptions);

  for (int phase = 0; phase < rows; ++phase) {
    if (phase > 0 && signaled) {
      learner->on_task_switch(
          observed ? std::optional<int>(schedule.phase_sequence[phase])
                   : std::nullopt);
    }
    fit_on_environment(*learner, *train_env, phase_budget,
                       &results.online_curve,
                       static_cast<long long>(phase) * phase_budget);

    {
      // validation stream: reporting only, never gradients
      const int val_task =
          stationary ? 0 : schedule.phase_sequence[phase];
      auto valid_env = wrap_for_setting(
          make_base_environment(handle, pinned_schedule(schedule, val_task),
                                derive_seed(seed, "valid_env", phase),
                                EnvRole::Valid),
          assumptions, /*enforce_schedule=*/false);
      const long long before = learner->update_count();
      Observation obs = valid_env->reset();
      double correct = 0.0;
      const int val_budget = branch == Branch::Passive ? 200 : 5;
      if (branch == Branch::Passive) {
        for (int i = 0; i < val_budget; ++i) {
          StepResult res = valid_env->step(learner->act(obs));
          correct += res.feedback.reward;
          obs = res.observation;
        }
        results.diagnostics.validation_scores.push_back(correct / val_budget);
      } else {
        double total = 0.0;
        for (int ep = 0; ep < val_budget; ++ep) {
          Observation o = valid_env->reset();
          double ret = 0.0;
          while (true) {
            StepResult res = valid_env->step(learner->act(o));
            ret += res.feedback.reward;
            if (res.observation.episode_done) break;
            o = res.observation;
          }
          total += ret;
        }
        results.diagnostics.validation_scores.push_back(total / val_budget);
      }
      results.diagnostics.test_updates += learner->update_count() - before;
      absorb_mask_stats(*valid_env, results.diagnostics);
    }

    for (int j = 0; j < num_tasks; ++j) {
      auto test_env = wrap_for_setting(
          make_base_environment(handle, pinned_schedule(schedule, j),
                                derive_seed(seed, "test_env", j),
                                EnvRole::Test),
          assumptions, /*enforce_schedule=*/false);
      const long long before = learner->update_count();
      results.matrix.at(phase, j) = evaluate_policy(*learner, *test_env, branch);
      results.diagnostics.test_updates += learner->update_count() - before;
      absorb_mask_stats(*test_env, results.diagnostics);
    }
  }
  absorb_mask_stats(*train_env, results.diagnostics);
  results.diagnostics.switches = learner->switch_count();

  for (double v : results.matrix.v) {
    if (!std::isfinite(v)) {
      throw RunError("non-finite transfer matrix entry");
    }
  }
  results.final_performance = final_performance(results.matrix);
  results.backward_transfer = backward_transfer(results.matrix);
  results.forward_transfer =
      forward_transfer(results.matrix, results.chance_baseline);
  results.online_performance = online_performance(results.online_curve);
  results.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return results;
}

nlohmann::json results_to_json(const Results& results) {
  nlohmann::json scalars;
  scalars["final_performance"] = results.final_performance;
  scalars["backward_transfer"] =
      results.backward_transfer ? nlohmann::json(*results.backward_transfer)
                                : nlohmann::json(nullptr);
  scalars["forward_transfer"] =
      results.forward_transfer ? nlohmann::json(*results.forward_transfer)
                               : nlohmann::json(nullptr);
  scalars["online_performance"] = results.online_performance;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [step, value] : results.online_curve) {
    curve.push_back({step, value});
  }
  return nlohmann::json{
      {"seed", results.seed},
      {"config", results.config},
      {"matrix",
       {{"metric_kind", results.matrix.metric_kind},
        {"rows", results.matrix.rows},
        {"cols", results.matrix.cols},
        {"data", results.matrix.v}}},
      {"online_curve", curve},
      {"chance_baseline", results.chance_baseline},
      {"scalars", scalars},
      {"diagnostics",
       {{"mask_observations", results.diagnostics.mask_observations},
        {"mask_violations", results.diagnostics.mask_violations},
        {"test_updates", results.diagnostics.test_updates},
        {"switches", results.diagnostics.switches},
        {"validation_scores", results.diagnostics.validation_scores}}},
      {"wall_time_seconds", results.wall_time_seconds}};
}

Results results_from_json(const nlohmann::json& j, bool verify) {
  Results results;
  results.seed = j.at("seed").get<std::uint64_t>();
  results.config = j.at("config");
  const auto& m = j.at("matrix");
  results.matrix.metric_kind = m.at("metric_kind").get<std::string>();
  results.matrix.rows = m.at("rows").get<int>();
  results.matrix.cols = m.at("cols").get<int>();
  results.matrix.v = m.at("data").get<std::vector<double>>();
  for (const auto& point : j.at("online_curve")) {
    results.online_curve.emplace_back(point.at(0).get<long long>(),
                                      point.at(1).get<double>());
  }
  results.chance_baseline =
      j.at("chance_baseline").get<std::vector<double>>();
  const auto& scalars = j.at("scalars");
  results.final_performance = scalars.at("final_performance").get<double>();
  if (!scalars.at("backward_transfer").is_null()) {
    results.backward_transfer = scalars.at("backward_transfer").get<double>();
  }
  if (!scalars.at("forward_transfer").is_null()) {
    results.forward_transfer = scalars.at("forward_transfer").get<double>();
  }
  results.online_performance =
      scalars.at("online_performance").get<double>();
  results.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  const auto& diag = j.at("diagnostics");
  results.diagnostics.mask_observations =
      diag.at("mask_observations").get<long long>();
  results.diagnostics.mask_violations =
      diag.at("mask_violations").get<long long>();
  results.diagnostics.test_updates = diag.at("test_updates").get<long long>();
  results.diagnostics.switches = diag.at("switches").get<int>();
  results.diagnostics.validation_scores =
      diag.at("validation_scores").get<std::vector<double>>();
  if (verify) {
    const double final = final_performance(results.matrix);
    const auto bwt = backward_transfer(results.matrix);
    const auto fwt =
        forward_transfer(results.matrix, results.chance_baseline);
    const double online = online_performance(results.online_curve);
    const bool ok =
        final == results.final_performance &&
        online == results.online_performance &&
        bwt.has_value() == results.backward_transfer.has_value() &&
        (!bwt || *bwt == *results.backward_transfer) &&
        fwt.has_value() == results.forward_transfer.has_value() &&
        (!fwt || *fwt == *results.forward_transfer);
    if (!ok) {
      throw RunError("stored scalars do not match the matrix/curve");
    }
  }
  return results;
}

std::string matrix_to_csv(const TransferMatrix& matrix) {
  std::ostringstream out;
  out << "trained_through";
  for (int j = 0; j < matrix.cols; ++j) out << ",task_" << j;
  out << "\n";
  for (int i = 0; i < matrix.rows; ++i) {
    out << i;
    for (int j = 0; j < matrix.cols; ++j) {
      out << "," << nlohmann::json(matrix.at(i, j)).dump();
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace cl
