#pragma once
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/envsim/environment.hpp"
#include "cl/methods/method.hpp"
#include "cl/taxonomy.hpp"

namespace cl {

// A runnable setting: a concrete catalog node plus the environment it
// evaluates over.
struct SettingInstance {
  SettingNode node;
  EnvironmentSpec env;
};

struct TransferMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;
  std::string metric_kind;  // "accuracy" | "mean_episode_return"

  TransferMatrix() = default;
  TransferMatrix(int r, int c, std::string kind)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0),
        metric_kind(std::move(kind)) {}
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const {
    return v[static_cast<std::size_t>(i) * cols + j];
  }
};

struct RunDiagnostics {
  long long mask_observations = 0;
  long long mask_violations = 0;
  long long test_updates = 0;
  int switches = 0;
  std::vector<double> validation_scores;  // one per phase, no gradients
};

struct Results {
  TransferMatrix matrix;
  OnlineCurve online_curve;
  std::vector<double> chance_baseline;  // per task
  double final_performance = 0.0;
  std::optional<double> backward_transfer;
  std::optional<double> forward_transfer;
  double online_performance = 0.0;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config;
  RunDiagnostics diagnostics;
};

// Evaluation budgets per transfer-matrix entry.
inline constexpr int kSlTestSamples = 1000;
inline constexpr int kRlTestEpisodes = 20;

double final_performance(const TransferMatrix& matrix);
// Null unless the matrix is square with at least two tasks.
std::optional<double> backward_transfer(const TransferMatrix& matrix);
std::optional<double> forward_transfer(const TransferMatrix& matrix,
                                       const std::vector<double>& baseline);
double online_performance(const OnlineCurve& curve);

using MethodFactory =
    std::function<std::unique_ptr<Method>(const SettingContext&)>;

// The per-task train/test protocol.  Sequential settings fit one phase
// at a time over a single continuous training stream, evaluating every
// task's held-out environment after each phase; stationary settings fit
// once.  on_task_switch fires only when boundaries are signaled, with
// the task id only when contexts are observed.
Results apply(const SettingInstance& setting, const MethodDescriptor& method,
              std::uint64_t seed, const nlohmann::json& config_echo = {});
Results apply_with_factory(const SettingInstance& setting,
                           const MethodDescriptor& method,
                           const MethodFactory& factory, std::uint64_t seed,
                           const nlohmann::json& config_echo = {});

nlohmann::json results_to_json(const Results& results);
// verify recomputes the derived scalars and requires exact agreement.
Results results_from_json(const nlohmann::json& j, bool verify = true);

std::string matrix_to_csv(const TransferMatrix& matrix);

}  // namespace cl
