#pragma once
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cl/envsim/environment.hpp"
#include "cl/learners/dense_net.hpp"
#include "cl/learners/qtable.hpp"
#include "cl/methods/replay_buffer.hpp"
#include "cl/rng.hpp"
#include "cl/taxonomy.hpp"

namespace cl {

// What a method learns about the setting it is configured for: the
// spaces drive model construction, the assumptions drive head/masking
// choices.
struct SettingContext {
  std::string setting_name;
  AssumptionVector assumptions;
  SpaceInfo spaces;
  long long steps_per_phase = 0;
  Family family = Family::SyntheticGaussianSL;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const SettingContext& ctx);
void from_json(const nlohmann::json& j, SettingContext& ctx);

using OnlineCurve = std::vector<std::pair<long long, double>>;

// Method lifecycle.  Training is push-based so the same surface serves
// the in-process learners and methods driven over the plugin stream:
// train_act picks the action for a training observation (completing any
// pending temporal-difference transition), train_feedback delivers the
// environment's response.
class Method {
 public:
  virtual ~Method() = default;
  virtual void begin_phase(long long budget) = 0;
  virtual int train_act(const Observation& obs) = 0;
  virtual void train_feedback(const Observation& obs, int action,
                              double reward, std::optional<int> label,
                              bool done) = 0;
  virtual void end_phase() = 0;
  virtual int act(const Observation& obs) = 0;  // greedy, no updates
  virtual void on_task_switch(std::optional<int> task_id) = 0;
  virtual long long update_count() const = 0;
  virtual int switch_count() const = 0;
};

// Consumes `budget` environment steps through the method's push surface
// and appends 100-step windows of training performance (mean correctness
// for the passive branch, mean completed-episode return for the active
// branch) to the curve.
void fit_on_environment(Method& method, Environment& env, long long budget,
                        OnlineCurve* curve, long long step_offset);

struct MethodConfig {
  bool frozen_random = false;
  // passive branch
  double lr = 0.05;
  int batch_size = 32;
  int epochs = 8;
  int hidden = 64;
  bool relu = false;  // tanh otherwise
  double ewc_lambda = 0.0;
  int fisher_samples = 512;
  int replay_capacity = 0;
  int multihead = -1;  // -1 = auto (on when task labels are observed)
  bool task_inference = false;
  // active branch
  double q_lr = 0.1;
  double q_gamma = 0.99;
  double q_lr_visit_decay = 0.0;
  double eps_start = 1.0;
  double eps_end = 0.05;
  int q_replay_capacity = 0;
  int replay_updates_per_step = 1;
  double q_ewc_lambda = 0.0;
};

std::map<std::string, double> config_to_map(const MethodConfig& config);
MethodConfig config_from_map(MethodConfig base,
                             const std::map<std::string, double>& overrides);

struct MethodPreset {
  std::string name;
  std::string target_setting;
  MethodConfig config;
};

// base and random target the root; ewc and replay target incremental.
const std::vector<MethodPreset>& builtin_methods();
const MethodPreset* find_builtin_method(const std::string& name);

// Descriptor with the preset's full hyperparameter set (plus overrides)
// echoed explicitly.  Throws ConfigError::UnknownMethod.
MethodDescriptor make_builtin_descriptor(
    const std::string& name, const std::map<std::string, double>& overrides);

struct SlItem {
  std::vector<double> x;
  int label = 0;  // as emitted by the environment
  int task = 0;   // head hint (observed id or boundary counter)
};

struct Transition {
  std::uint64_t s = 0;
  int a = 0;
  double r = 0.0;
  std::uint64_t s_next = 0;
  bool done = false;
  int head = 0;
};

// The shipped learner: fine-tuning backbone with optional multi-head +
// task inference, EWC consolidation, and experience replay, over a dense
// net (passive branch) or tabular Q (active branch).
class MethodInstance : public Method {
 public:
  static MethodInstance configure(const MethodDescriptor& descriptor,
                                  const SettingContext& setting);

  void begin_phase(long long budget) override;
  int train_act(const Observation& obs) override;
  void train_feedback(const Observation& obs, int action, double reward,
                      std::optional<int> label, bool done) override;
  void end_phase() override;
  int act(const Observation& obs) override;
  void on_task_switch(std::optional<int> task_id) override;
  long long update_count() const override { return updates_; }
  int switch_count() const override { return switches_; }

  std::vector<int> get_actions(const std::vector<Observation>& observations);

  // Head with minimal predictive entropy; ties to the lowest index.
  int infer_task(const std::vector<double>& x) const;

  const MethodDescriptor& descriptor() const { return descriptor_; }
  const MethodConfig& config() const { return config_; }
  const SettingContext& setting() const { return setting_; }
  bool multihead_enabled() const { return multihead_; }
  int num_heads() const { return static_cast<int>(head_w_.size()); }
  int active_head() const { return active_head_; }

  std::vector<double> parameters_flat() const;
  const std::vector<std::pair<std::vector<double>, std::vector<double>>>&
  ewc_anchors() const {
    return ewc_anchors_;
  }
  const ReplayBuffer<SlItem>& sl_replay() const { return sl_replay_; }
  const QTable& q_table(int head = 0) const { return q_tables_.at(head); }

  nlohmann::json checkpoint() const;
  static MethodInstance restore(const nlohmann::json& j);

 private:
  MethodInstance() : rng_(0), replay_rng_(0) {}

  bool active() const { return setting_.spaces.branch == Branch::Active; }
  int pick_head_training(const Observation& obs) const;
  int frozen_action(const Observation& obs) const;
  int head_offset(int head) const;
  int head_width() const;
  std::vector<double> head_logits(int head,
                                  const std::vector<double>& trunk_out) const;
  std::vector<double> trunk_forward(const std::vector<double>& x) const;
  int greedy_from_logits(const std::vector<double>& logits, int lo,
                         int hi) const;
  void train_chunk(const std::vector<SlItem>& chunk);
  void sl_learn_batch(const std::vector<SlItem>& batch);
  void apply_ewc_penalty_step();
  std::vector<double> fisher_flat(const std::vector<SlItem>& items) const;
  void td_update(int head, std::uint64_t s, int a, double r,
                 std::uint64_t s_next, bool done);
  void live_rl_update(const Transition& t);
  double eps_now() const;
  std::size_t sl_chunk_size() const;

  MethodDescriptor descriptor_;
  SettingContext setting_;
  MethodConfig config_;
  bool multihead_ = false;
  Rng rng_;
  Rng replay_rng_;

  // passive branch state
  DenseNet trunk_;
  std::vector<Matrix> head_w_;
  std::vector<std::vector<double>> head_b_;
  std::vector<char> head_trained_;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> ewc_anchors_;
  ReplayBuffer<SlItem> sl_replay_;
  std::deque<SlItem> fisher_tail_;
  std::vector<SlItem> phase_data_;
  std::vector<SlItem> pending_items_;

  // active branch state
  QDiscretizer discretizer_;
  std::vector<QTable> q_tables_;
  struct QAnchor {
    std::vector<QTable> tables;
    long long max_visit = 1;
  };
  std::vector<QAnchor> q_anchors_;
  ReplayBuffer<Transition> rl_replay_;
  struct PendingTransition {
    std::uint64_t s = 0;
    int a = 0;
    double r = 0.0;
    int head = 0;
    bool set = false;
  } pending_rl_;

  int active_head_ = 0;
  long long phase_budget_ = 0;
  long long phase_step_ = 0;
  long long updates_ = 0;
  int switches_ = 0;
};

}  // namespace cl
