#include "cl/methods/method.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cl/errors.hpp"
#include "cl/learners/kernels.hpp"

namespace cl {

void to_json(nlohmann::json& j, const SettingContext& ctx) {
  nlohmann::json assumptions;
  to_json(assumptions, ctx.assumptions);
  j = nlohmann::json{{"name", ctx.setting_name},
                     {"assumptions", assumptions},
                     {"observation_dim", ctx.spaces.observation_dim},
                     {"num_actions", ctx.spaces.num_actions},
                     {"actions_per_task", ctx.spaces.actions_per_task},
                     {"disjoint_actions", ctx.spaces.disjoint_actions},
                     {"num_tasks", ctx.spaces.num_tasks},
                     {"branch", ctx.spaces.branch == Branch::Active ? "active"
                                                                    : "passive"},
                     {"steps_per_phase", ctx.steps_per_phase},
                     {"family", family_to_string(ctx.family)},
                     {"seed", ctx.seed}};
}

void from_json(const nlohmann::json& j, SettingContext& ctx) {
  ctx.setting_name = j.at("name").get<std::string>();
  from_json(j.at("assumptions"), ctx.assumptions);
  ctx.spaces.observation_dim = j.at("observation_dim").get<int>();
  ctx.spaces.num_actions = j.at("num_actions").get<int>();
  ctx.spaces.actions_per_task = j.at("actions_per_task").get<int>();
  ctx.spaces.disjoint_actions = j.at("disjoint_actions").get<bool>();
  ctx.spaces.num_tasks = j.at("num_tasks").get<int>();
  ctx.spaces.branch = j.at("branch").get<std::string>() == "active"
                          ? Branch::Active
                          : Branch::Passive;
  ctx.steps_per_phase = j.at("steps_per_phase").get<long long>();
  ctx.family = family_from_string(j.at("family").get<std::string>());
  ctx.seed = j.at("seed").get<std::uint64_t>();
}

void fit_on_environment(Method& method, Environment& env, long long budget,
                        OnlineCurve* curve, long long step_offset) {
  const Branch branch = env.spaces().branch;
  constexpr long long kWindow = 100;
  method.begin_phase(budget);
  Observation obs = env.reset();
  double window_reward = 0.0;
  long long window_steps = 0;
  double episode_return = 0.0;
  double window_return_sum = 0.0;
  int window_episodes = 0;
  double last_value = 0.0;
  for (long long t = 0; t < budget; ++t) {
    const int action = method.train_act(obs);
    StepResult res = env.step(action);
    method.train_feedback(obs, action, res.feedback.reward,
                          res.feedback.label, res.observation.episode_done);
    window_reward += res.feedback.reward;
    ++window_steps;
    if (branch == Branch::Active) {
      episode_return += res.feedback.reward;
      if (res.observation.episode_done) {
        window_return_sum += episode_return;
        ++window_episodes;
        episode_return = 0.0;
      }
    }
    if ((t + 1) % kWindow == 0 || t + 1 == budget) {
      double value = 0.0;
      if (branch == Branch::Passive) {
        value = window_reward / static_cast<double>(window_steps);
      } else {
        value = window_episodes > 0
                    ? window_return_sum / window_episodes
                    : last_value;
      }
      if (curve) curve->emplace_back(step_offset + t + 1, value);
      last_value = value;
      window_reward = 0.0;
      window_steps = 0;
      window_return_sum = 0.0;
      window_episodes = 0;
    }
    obs = res.observation.episode_done ? env.reset() : res.observation;
  }
  method.end_phase();
}

namespace {

struct ConfigField {
  const char* name;
  double MethodConfig::* dfield = nullptr;
  int MethodConfig::* ifield = nullptr;
  bool MethodConfig::* bfield = nullptr;
};

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      {"frozen_random", nullptr, nullptr, &MethodConfig::frozen_random},
      {"lr", &MethodConfig::lr},
      {"batch_size", nullptr, &MethodConfig::batch_size},
      {"epochs", nullptr, &MethodConfig::epochs},
      {"hidden", nullptr, &MethodConfig::hidden},
      {"relu", nullptr, nullptr, &MethodConfig::relu},
      {"ewc_lambda", &MethodConfig::ewc_lambda},
      {"fisher_samples", nullptr, &MethodConfig::fisher_samples},
      {"replay_capacity", nullptr, &MethodConfig::replay_capacity},
      {"multihead", nullptr, &MethodConfig::multihead},
      {"task_inference", nullptr, nullptr, &MethodConfig::task_inference},
      {"q_lr", &MethodConfig::q_lr},
      {"q_gamma", &MethodConfig::q_gamma},
      {"q_lr_visit_decay", &MethodConfig::q_lr_visit_decay},
      {"eps_start", &MethodConfig::eps_start},
      {"eps_end", &MethodConfig::eps_end},
      {"q_replay_capacity", nullptr, &MethodConfig::q_replay_capacity},
      {"replay_updates_per_step", nullptr,
       &MethodConfig::replay_updates_per_step},
      {"q_ewc_lambda", &MethodConfig::q_ewc_lambda},
  };
  return fields;
}

}  // namespace

std::map<std::string, double> config_to_map(const MethodConfig& config) {
  std::map<std::string, double> map;
  for (const auto& f : config_fields()) {
    if (f.dfield) map[f.name] = config.*(f.dfield);
    else if (f.ifield) map[f.name] = static_cast<double>(config.*(f.ifield));
    else map[f.name] = config.*(f.bfield) ? 1.0 : 0.0;
  }
  return map;
}

MethodConfig config_from_map(MethodConfig base,
                             const std::map<std::string, double>& overrides) {
  for (const auto& [key, value] : overrides) {
    bool known = false;
    for (const auto& f : config_fields()) {
      if (key != f.name) continue;
      known = true;
      if (f.dfield) base.*(f.dfield) = value;
      else if (f.ifield) base.*(f.ifield) = static_cast<int>(value);
      else base.*(f.bfield) = value != 0.0;
      break;
    }
    if (!known) {
      throw ConfigError(ConfigError::Code::MalformedField,
                        "unknown hyperparameter: " + key);
    }
  }
  return base;
}

const std::vector<MethodPreset>& builtin_methods() {
  static const std::vector<MethodPreset> presets = [] {
    std::vector<MethodPreset> out;
    out.push_back({"base", "continuous_task_agnostic", MethodConfig{}});
    MethodConfig random_cfg;
    random_cfg.frozen_random = true;
    out.push_back({"random", "continuous_task_agnostic", random_cfg});
    MethodConfig ewc_cfg;
    ewc_cfg.ewc_lambda = 100.0;
    ewc_cfg.q_ewc_lambda = 1.0;
    out.push_back({"ewc", "incremental", ewc_cfg});
    MethodConfig replay_cfg;
    replay_cfg.replay_capacity = 500;
    replay_cfg.q_replay_capacity = 5000;
    out.push_back({"replay", "incremental", replay_cfg});
    return out;
  }();
  return presets;
}

const MethodPreset* find_builtin_method(const std::string& name) {
  for (const auto& preset : builtin_methods()) {
    if (preset.name == name) return &preset;
  }
  return nullptr;
}

MethodDescriptor make_builtin_descriptor(
    const std::string& name, const std::map<std::string, double>& overrides) {
  const MethodPreset* preset = find_builtin_method(name);
  if (!preset) {
    throw ConfigError(ConfigError::Code::UnknownMethod,
                      "unknown method: " + name);
  }
  MethodConfig config = config_from_map(preset->config, overrides);
  MethodDescriptor desc;
  desc.name = name;
  desc.target = setting_or_throw(preset->target_setting).assumptions;
  desc.hyperparameters = config_to_map(config);
  return desc;
}

MethodInstance MethodInstance::configure(const MethodDescriptor& descriptor,
                                         const SettingContext& setting) {
  if (!is_applicable(descriptor, setting.assumptions)) {
    throw ConfigError(
        ConfigError::Code::NotApplicable,
        "method '" + descriptor.name + "' does not apply to setting '" +
            setting.setting_name + "': failing axis " +
            failing_axis(descriptor.target, setting.assumptions));
  }
  MethodInstance m;
  m.descriptor_ = descriptor;
  m.setting_ = setting;
  m.config_ = config_from_map(MethodConfig{}, descriptor.hyperparameters);
  const bool observed =
      setting.assumptions.context_observed == ContextObserved::Observed;
  m.multihead_ = m.config_.multihead < 0
                     ? (observed || (m.config_.task_inference &&
                                     setting.spaces.branch == Branch::Passive))
                     : m.config_.multihead > 0;
  m.rng_ = Rng(setting.seed).split("method").split("train");
  m.replay_rng_ = Rng(setting.seed).split("method").split("replay");

  const SpaceInfo& sp = setting.spaces;
  if (sp.branch == Branch::Passive) {
    Rng init = Rng(setting.seed).split("method").split("init");
    m.trunk_ = DenseNet::init({sp.observation_dim, m.config_.hidden},
                              m.config_.relu ? Activation::ReLU
                                             : Activation::Tanh,
                              init, /*activate_output=*/true);
    const int heads = m.multihead_ ? sp.num_tasks : 1;
    const int width = m.multihead_ ? sp.actions_per_task : sp.num_actions;
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.config_.hidden));
    for (int h = 0; h < heads; ++h) {
      Matrix w(m.config_.hidden, width);
      for (double& v : w.v) v = init.uniform(-bound, bound);
      m.head_w_.push_back(std::move(w));
      std::vector<double> b(width);
      for (double& v : b) v = init.uniform(-bound, bound);
      m.head_b_.push_back(std::move(b));
    }
    m.head_trained_.assign(heads, 0);
    m.sl_replay_ = ReplayBuffer<SlItem>(m.config_.replay_capacity);
  } else {
    m.discretizer_ = setting.family == Family::CartPoleVariant
                         ? cartpole_discretizer()
                         : onehot_discretizer();
    const int tables = m.multihead_ ? sp.num_tasks : 1;
    for (int t = 0; t < tables; ++t) m.q_tables_.emplace_back(sp.num_actions);
    m.rl_replay_ = ReplayBuffer<Transition>(m.config_.q_replay_capacity);
  }
  return m;
}

int MethodInstance::head_offset(int head) const {
  return (multihead_ && setting_.spaces.disjoint_actions)
             ? head * setting_.spaces.actions_per_task
             : 0;
}

int MethodInstance::head_width() const {
  return multihead_ ? setting_.spaces.actions_per_task
                    : setting_.spaces.num_actions;
}

std::vector<double> MethodInstance::trunk_forward(
    const std::vector<double>& x) const {
  Matrix input(1, static_cast<int>(x.size()));
  input.v = x;
  Matrix out = forward(trunk_, input);
  return out.v;
}

std::vector<double> MethodInstance::head_logits(
    int head, const std::vector<double>& trunk_out) const {
  const Matrix& w = head_w_[head];
  const std::vector<double>& b = head_b_[head];
  std::vector<double> logits(w.cols);
  kernels::dense_forward(trunk_out.data(), 1, w.rows, w.data(), b.data(),
                         w.cols, logits.data());
  return logits;
}

int MethodInstance::greedy_from_logits(const std::vector<double>& logits,
                                       int lo, int hi) const {
  int best = lo;
  for (int i = lo + 1; i < hi; ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

int MethodInstance::frozen_action(const Observation& obs) const {
  std::uint64_t h = Rng::mix(setting_.seed ^ 0x66726f7a656e5f61ULL);
  for (double v : obs.x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    h = Rng::mix(h ^ bits);
  }
  const SpaceInfo& sp = setting_.spaces;
  if (sp.disjoint_actions && obs.task_id) {
    return *obs.task_id * sp.actions_per_task +
           static_cast<int>(h % static_cast<std::uint64_t>(sp.actions_per_task));
  }
  return static_cast<int>(h % static_cast<std::uint64_t>(sp.num_actions));
}

int MethodInstance::pick_head_training(const Observation& obs) const {
  if (!multihead_) return 0;
  if (obs.task_id) return std::min(*obs.task_id, num_heads() - 1);
  return active_head_;
}

int MethodInstance::infer_task(const std::vector<double>& x) const {
  int trained = 0;
  for (char t : head_trained_) trained += t;
  if (trained == 0) {
    throw RunError("task inference requires at least one trained head");
  }
  const std::vector<double> h = trunk_forward(x);
  int best = -1;
  double best_entropy = 0.0;
  for (int head = 0; head < num_heads(); ++head) {
    if (!head_trained_[head]) continue;
    const std::vector<double> logits = head_logits(head, h);
    const auto p = softmax_row(logits.data(), static_cast<int>(logits.size()));
    double entropy = 0.0;
    for (double pi : p)
      if (pi > 0.0) entropy -= pi * std::log(pi);
    if (best < 0 || entropy < best_entropy) {
      best = head;
      best_entropy = entropy;
    }
  }
  return best;
}

int MethodInstance::act(const Observation& obs) {
  if (config_.frozen_random) return frozen_action(obs);
  if (active()) {
    int head = 0;
    if (multihead_) {
      if (!obs.task_id) {
        throw RunError("multi-head Q prediction needs an observed task id");
      }
      head = std::min(*obs.task_id, num_heads() - 1);
    }
    return q_tables_[head].greedy_action(discretizer_.key(obs.x));
  }
  const std::vector<double> h = trunk_forward(obs.x);
  if (multihead_) {
    int head;
    if (obs.task_id) {
      head = std::min(*obs.task_id, num_heads() - 1);
    } else if (config_.task_inference) {
      head = infer_task(obs.x);
    } else {
      throw RunError(
          "multi-head prediction needs a task id or task inference");
    }
    const std::vector<double> logits = head_logits(head, h);
    const int local =
        greedy_from_logits(logits, 0, static_cast<int>(logits.size()));
    return head_offset(head) + local;
  }
  const std::vector<double> logits = head_logits(0, h);
  const SpaceInfo& sp = setting_.spaces;
  if (sp.disjoint_actions && obs.task_id &&
      setting_.assumptions.context_observed == ContextObserved::Observed) {
    const int lo = *obs.task_id * sp.actions_per_task;
    return greedy_from_logits(logits, lo, lo + sp.actions_per_task);
  }
  return greedy_from_logits(logits, 0, static_cast<int>(logits.size()));
}

std::vector<int> MethodInstance::get_actions(
    const std::vector<Observation>& observations) {
  std::vector<int> actions;
  actions.reserve(observations.size());
  for (const auto& obs : observations) actions.push_back(act(obs));
  return actions;
}

void MethodInstance::begin_phase(long long budget) {
  phase_budget_ = budget;
  phase_step_ = 0;
  phase_data_.clear();
  pending_items_.clear();
}

double MethodInstance::eps_now() const {
  const long long half = std::max<long long>(phase_budget_ / 2, 1);
  if (phase_step_ >= half) return config_.eps_end;
  const double frac = static_cast<double>(phase_step_) / static_cast<double>(half);
  return config_.eps_start + (config_.eps_end - config_.eps_start) * frac;
}

std::size_t MethodInstance::sl_chunk_size() const {
  const int batch = std::max(config_.batch_size, 1);
  return config_.replay_capacity > 0
             ? static_cast<std::size_t>(std::max(batch / 2, 1))
             : static_cast<std::size_t>(batch);
}

int MethodInstance::train_act(const Observation& obs) {
  if (active()) {
    const std::uint64_t key = discretizer_.key(obs.x);
    if (pending_rl_.set) {
      Transition t{pending_rl_.s, pending_rl_.a, pending_rl_.r, key, false,
                   pending_rl_.head};
      pending_rl_.set = false;
      if (config_.q_replay_capacity > 0) rl_replay_.insert(t, replay_rng_);
      live_rl_update(t);
    }
    if (config_.frozen_random) return frozen_action(obs);
    const int head = pick_head_training(obs);
    return epsilon_greedy(q_tables_[head], key, eps_now(), rng_);
  }
  if (config_.frozen_random) return frozen_action(obs);
  // greedy prediction with the current parameters; this is what the
  // online training performance measures
  if (multihead_) {
    const int head = pick_head_training(obs);
    const std::vector<double> h = trunk_forward(obs.x);
    const std::vector<double> logits = head_logits(head, h);
    const int local =
        greedy_from_logits(logits, 0, static_cast<int>(logits.size()));
    return head_offset(head) + local;
  }
  const std::vector<double> h = trunk_forward(obs.x);
  const std::vector<double> logits = head_logits(0, h);
  const SpaceInfo& sp = setting_.spaces;
  if (sp.disjoint_actions && obs.task_id) {
    const int lo = *obs.task_id * sp.actions_per_task;
    return greedy_from_logits(logits, lo, lo + sp.actions_per_task);
  }
  return greedy_from_logits(logits, 0, static_cast<int>(logits.size()));
}

void MethodInstance::train_feedback(const Observation& obs, int action,
                                    double reward, std::optional<int> label,
                                    bool done) {
  if (config_.frozen_random) {
    ++phase_step_;
    return;
  }
  if (active()) {
    const std::uint64_t key = discretizer_.key(obs.x);
    const int head = pick_head_training(obs);
    if (done) {
      Transition t{key, action, reward, key, true, head};
      if (config_.q_replay_capacity > 0) rl_replay_.insert(t, replay_rng_);
      live_rl_update(t);
    } else {
      pending_rl_ = {key, action, reward, head, true};
    }
    ++phase_step_;
    return;
  }
  if (!label) {
    throw RunError("passive training requires a label in the feedback");
  }
  SlItem item;
  item.x = obs.x;
  item.label = *label;
  item.task = obs.task_id ? *obs.task_id : active_head_;
  phase_data_.push_back(item);
  if (config_.replay_capacity > 0) sl_replay_.insert(item, replay_rng_);
  if (config_.ewc_lambda > 0.0) {
    fisher_tail_.push_back(item);
    while (static_cast<int>(fisher_tail_.size()) > config_.fisher_samples)
      fisher_tail_.pop_front();
  }
  pending_items_.push_back(std::move(item));
  if (pending_items_.size() >= sl_chunk_size()) {
    train_chunk(pending_items_);
    pending_items_.clear();
  }
  ++phase_step_;
}

void MethodInstance::end_phase() {
  if (config_.frozen_random || active()) return;
  if (!pending_items_.empty()) {
    train_chunk(pending_items_);
    pending_items_.clear();
  }
  // extra passes over the phase data
  for (int epoch = 1; epoch < config_.epochs; ++epoch) {
    std::vector<std::size_t> order(phase_data_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(rng_.uniform_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }
    const std::size_t chunk = sl_chunk_size();
    for (std::size_t start = 0; start < order.size(); start += chunk) {
      std::vector<SlItem> batch;
      for (std::size_t i = start; i < std::min(start + chunk, order.size());
           ++i) {
        batch.push_back(phase_data_[order[i]]);
      }
      train_chunk(batch);
    }
  }
  phase_data_.clear();
}

void MethodInstance::train_chunk(const std::vector<SlItem>& chunk) {
  std::vector<SlItem> batch = chunk;
  if (config_.replay_capacity > 0 && !sl_replay_.empty()) {
    const int want = std::max(config_.batch_size / 2, 1);
    const int n = std::min<int>(want, static_cast<int>(sl_replay_.size()));
    for (auto& item : sl_replay_.sample(n, replay_rng_)) {
      batch.push_back(std::move(item));
    }
  }
  sl_learn_batch(batch);
}

void MethodInstance::sl_learn_batch(const std::vector<SlItem>& batch) {
  if (batch.empty()) return;
  const SpaceInfo& sp = setting_.spaces;
  const bool observed =
      setting_.assumptions.context_observed == ContextObserved::Observed;
  const bool masked_single =
      !multihead_ && sp.disjoint_actions && observed;
  // group samples sharing a head (or mask window)
  std::map<int, std::vector<const SlItem*>> groups;
  for (const auto& item : batch) {
    const int key = (multihead_ || masked_single) ? item.task : 0;
    groups[key].push_back(&item);
  }
  const double inv_total = 1.0 / static_cast<double>(batch.size());
  GradientBundle trunk_grads = zeros_like(trunk_);
  std::map<int, std::pair<Matrix, std::vector<double>>> head_grads;
  for (const auto& [key, items] : groups) {
    const int head = multihead_ ? std::min(key, num_heads() - 1) : 0;
    const int n = static_cast<int>(items.size());
    Matrix x(n, sp.observation_dim);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      std::copy(items[i]->x.begin(), items[i]->x.end(),
                x.v.begin() + static_cast<std::size_t>(i) * sp.observation_dim);
      labels[i] = multihead_ ? items[i]->label - head_offset(head)
                             : items[i]->label;
    }
    ForwardCache cache;
    Matrix trunk_out = forward_cached(trunk_, x, cache);
    const Matrix& w = head_w_[head];
    Matrix logits(n, w.cols);
    kernels::dense_forward(trunk_out.data(), n, w.rows, w.data(),
                           head_b_[head].data(), w.cols, logits.data());
    int lo = 0, hi = w.cols;
    if (masked_single) {
      lo = key * sp.actions_per_task;
      hi = lo + sp.actions_per_task;
    }
    Matrix delta(n, w.cols);
    for (int i = 0; i < n; ++i) {
      const auto p = softmax_row(
          logits.data() + static_cast<std::size_t>(i) * w.cols, w.cols,
          masked_single ? lo : -1, masked_single ? hi : -1);
      const int label = labels[i];
      if (label < lo || label >= hi) {
        throw RunError("training label outside the active output window");
      }
      for (int c = lo; c < hi; ++c) {
        delta.at(i, c) = (p[c] - (c == label ? 1.0 : 0.0)) * inv_total;
      }
    }
    auto& hg = head_grads.try_emplace(head, Matrix(w.rows, w.cols),
                                      std::vector<double>(w.cols, 0.0))
                   .first->second;
    Matrix dw(w.rows, w.cols);
    kernels::grad_weights(trunk_out.data(), delta.data(), n, w.rows, w.cols,
                          dw.data());
    kernels::axpy(1.0, dw.data(), hg.first.data(), dw.v.size());
    std::vector<double> db(w.cols, 0.0);
    kernels::grad_bias(delta.data(), n, w.cols, db.data());
    kernels::axpy(1.0, db.data(), hg.second.data(), db.size());
    Matrix dtrunk(n, w.rows);
    kernels::backprop_delta(delta.data(), w.data(), n, w.rows, w.cols,
                            dtrunk.data());
    trunk_grads.add_scaled(backward_from_delta(trunk_, cache, dtrunk), 1.0);
    head_trained_[head] = 1;
  }
  if (!trunk_grads.finite()) throw RunError("non-finite gradient");
  for (int l = 0; l < trunk_.num_layers(); ++l) {
    kernels::axpy(-config_.lr, trunk_grads.weights[l].data(),
                  trunk_.weights[l].data(), trunk_.weights[l].v.size());
    kernels::axpy(-config_.lr, trunk_grads.biases[l].data(),
                  trunk_.biases[l].data(), trunk_.biases[l].size());
  }
  for (auto& [head, hg] : head_grads) {
    kernels::axpy(-config_.lr, hg.first.data(), head_w_[head].data(),
                  hg.first.v.size());
    kernels::axpy(-config_.lr, hg.second.data(), head_b_[head].data(),
                  hg.second.size());
  }
  apply_ewc_penalty_step();
  ++updates_;
}

namespace {

template <typename Trunk, typename HeadW, typename HeadB, typename F>
void visit_sl(Trunk& trunk, HeadW& head_w, HeadB& head_b, F&& f) {
  for (std::size_t l = 0; l < trunk.weights.size(); ++l) {
    for (auto& v : trunk.weights[l].v) f(v);
    for (auto& v : trunk.biases[l]) f(v);
  }
  for (std::size_t h = 0; h < head_w.size(); ++h) {
    for (auto& v : head_w[h].v) f(v);
    for (auto& v : head_b[h]) f(v);
  }
}

}  // namespace

void MethodInstance::apply_ewc_penalty_step() {
  if (config_.ewc_lambda <= 0.0 || ewc_anchors_.empty()) return;
  const double scale = config_.lr * config_.ewc_lambda;
  std::size_t idx = 0;
  visit_sl(trunk_, head_w_, head_b_, [&](double& p) {
    double grad = 0.0;
    for (const auto& [theta_star, fisher] : ewc_anchors_) {
      grad += fisher[idx] * (p - theta_star[idx]);
    }
    p -= scale * grad;
    ++idx;
  });
}

std::vector<double> MethodInstance::parameters_flat() const {
  std::vector<double> flat;
  visit_sl(trunk_, head_w_, head_b_, [&](const double& p) { flat.push_back(p); });
  return flat;
}

std::vector<double> MethodInstance::fisher_flat(
    const std::vector<SlItem>& items) const {
  // offsets of each head block in the flat layout
  std::size_t trunk_params = trunk_.parameter_count();
  std::vector<std::size_t> head_off(head_w_.size());
  std::size_t off = trunk_params;
  for (std::size_t h = 0; h < head_w_.size(); ++h) {
    head_off[h] = off;
    off += head_w_[h].v.size() + head_b_[h].size();
  }
  std::vector<double> fisher(off, 0.0);
  const SpaceInfo& sp = setting_.spaces;
  const bool observed =
      setting_.assumptions.context_observed == ContextObserved::Observed;
  const bool masked_single = !multihead_ && sp.disjoint_actions && observed;
  for (const auto& item : items) {
    const int head = multihead_ ? std::min(item.task, num_heads() - 1) : 0;
    Matrix x(1, sp.observation_dim);
    x.v = item.x;
    ForwardCache cache;
    Matrix trunk_out = forward_cached(trunk_, x, cache);
    const Matrix& w = head_w_[head];
    std::vector<double> logits(w.cols);
    kernels::dense_forward(trunk_out.data(), 1, w.rows, w.data(),
                           head_b_[head].data(), w.cols, logits.data());
    int lo = 0, hi = w.cols;
    if (masked_single) {
      lo = item.task * sp.actions_per_task;
      hi = lo + sp.actions_per_task;
    }
    const int argmax =
        greedy_from_logits(logits, lo, hi);
    const auto p = softmax_row(logits.data(), w.cols, masked_single ? lo : -1,
                               masked_single ? hi : -1);
    Matrix delta(1, w.cols);
    for (int c = lo; c < hi; ++c)
      delta.at(0, c) = p[c] - (c == argmax ? 1.0 : 0.0);
    Matrix dw(w.rows, w.cols);
    kernels::grad_weights(trunk_out.data(), delta.data(), 1, w.rows, w.cols,
                          dw.data());
    std::vector<double> db(w.cols, 0.0);
    kernels::grad_bias(delta.data(), 1, w.cols, db.data());
    Matrix dtrunk(1, w.rows);
    kernels::backprop_delta(delta.data(), w.data(), 1, w.rows, w.cols,
                            dtrunk.data());
    GradientBundle tg = backward_from_delta(trunk_, cache, dtrunk);
    std::size_t idx = 0;
    for (std::size_t l = 0; l < tg.weights.size(); ++l) {
      for (double v : tg.weights[l].v) fisher[idx++] += v * v;
      for (double v : tg.biases[l]) fisher[idx++] += v * v;
    }
    idx = head_off[head];
    for (double v : dw.v) fisher[idx++] += v * v;
    for (double v : db) fisher[idx++] += v * v;
  }
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(items.size(), 1));
  for (double& v : fisher) v *= inv;
  return fisher;
}

void MethodInstance::td_update(int head, std::uint64_t s, int a, double r,
                               std::uint64_t s_next, bool done) {
  QTable& table = q_tables_[head];
  const double lr =
      config_.q_lr /
      (1.0 + config_.q_lr_visit_decay * static_cast<double>(table.visits(s, a)));
  q_update(table, s, a, r, s_next, done, lr, config_.q_gamma);
  if (config_.q_ewc_lambda > 0.0) {
    for (const auto& anchor : q_anchors_) {
      if (head >= static_cast<int>(anchor.tables.size())) continue;
      const QTable::Entry* e = anchor.tables[head].find(s);
      if (!e || e->visits[a] == 0) continue;
      const double weight = static_cast<double>(e->visits[a]) /
                            static_cast<double>(anchor.max_visit);
      double& q = table.entry(s).q[a];
      q -= lr * config_.q_ewc_lambda * weight * (q - e->q[a]);
    }
  }
  ++updates_;
}

void MethodInstance::live_rl_update(const Transition& t) {
  td_update(t.head, t.s, t.a, t.r, t.s_next, t.done);
  if (config_.q_replay_capacity > 0 && !rl_replay_.empty()) {
    for (int k = 0; k < config_.replay_updates_per_step; ++k) {
      const auto& items = rl_replay_.items();
      const Transition& drawn =
          items[static_cast<std::size_t>(
              replay_rng_.uniform_int(static_cast<int>(items.size())))];
      td_update(drawn.head, drawn.s, drawn.a, drawn.r, drawn.s_next,
                drawn.done);
    }
  }
}

void MethodInstance::on_task_switch(std::optional<int> task_id) {
  ++switches_;
  if (config_.frozen_random) return;
  if (!active() && config_.ewc_lambda > 0.0 && !fisher_tail_.empty()) {
    std::vector<SlItem> tail(fisher_tail_.begin(), fisher_tail_.end());
    ewc_anchors_.emplace_back(parameters_flat(), fisher_flat(tail));
    fisher_tail_.clear();
  }
  if (active() && config_.q_ewc_lambda > 0.0) {
    QAnchor anchor;
    anchor.tables = q_tables_;
    long long max_visit = 1;
    for (const auto& table : anchor.tables) {
      for (const auto& [key, entry] : table.entries) {
        (void)key;
        for (long long v : entry.visits) max_visit = std::max(max_visit, v);
      }
    }
    anchor.max_visit = max_visit;
    q_anchors_.push_back(std::move(anchor));
  }
  if (multihead_) {
    const int next = task_id ? *task_id : active_head_ + 1;
    active_head_ = std::clamp(next, 0, num_heads() - 1);
  }
}

nlohmann::json MethodInstance::checkpoint() const {
  nlohmann::json desc;
  nlohmann::json target;
  to_json(target, descriptor_.target);
  desc = {{"name", descriptor_.name},
          {"target", target},
          {"hyperparameters", descriptor_.hyperparameters}};
  nlohmann::json setting;
  to_json(setting, setting_);
  nlohmann::json state;
  state["multihead"] = multihead_;
  state["active_head"] = active_head_;
  state["switches"] = switches_;
  state["updates"] = updates_;
  if (setting_.spaces.branch == Branch::Passive) {
    state["trunk"] = net_to_json(trunk_);
    nlohmann::json heads = nlohmann::json::array();
    for (int h = 0; h < num_heads(); ++h) {
      heads.push_back({{"w", head_w_[h].v},
                       {"rows", head_w_[h].rows},
                       {"cols", head_w_[h].cols},
                       {"b", head_b_[h]},
                       {"trained", static_cast<bool>(head_trained_[h])}});
    }
    state["heads"] = heads;
    nlohmann::json anchors = nlohmann::json::array();
    for (const auto& [theta, fisher] : ewc_anchors_) {
      anchors.push_back({{"theta", theta}, {"fisher", fisher}});
    }
    state["ewc_anchors"] = anchors;
    nlohmann::json replay = nlohmann::json::array();
    for (const auto& item : sl_replay_.items()) {
      replay.push_back({{"x", item.x}, {"label", item.label}, {"task", item.task}});
    }
    state["replay"] = {{"items", replay}, {"inserted", sl_replay_.inserted()}};
  } else {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& table : q_tables_) tables.push_back(qtable_to_json(table));
    state["q_tables"] = tables;
    nlohmann::json anchors = nlohmann::json::array();
    for (const auto& anchor : q_anchors_) {
      nlohmann::json at = nlohmann::json::array();
      for (const auto& table : anchor.tables) at.push_back(qtable_to_json(table));
      anchors.push_back({{"tables", at}, {"max_visit", anchor.max_visit}});
    }
    state["q_anchors"] = anchors;
    nlohmann::json replay = nlohmann::json::array();
    for (const auto& t : rl_replay_.items()) {
      replay.push_back({{"s", t.s},
                        {"a", t.a},
                        {"r", t.r},
                        {"s_next", t.s_next},
                        {"done", t.done},
                        {"head", t.head}});
    }
    state["replay"] = {{"items", replay}, {"inserted", rl_replay_.inserted()}};
  }
  return nlohmann::json{
      {"descriptor", desc}, {"setting", setting}, {"state", state}};
}

MethodInstance MethodInstance::restore(const nlohmann::json& j) {
  MethodDescriptor desc;
  desc.name = j.at("descriptor").at("name").get<std::string>();
  from_json(j.at("descriptor").at("target"), desc.target);
  desc.hyperparameters = j.at("descriptor")
                             .at("hyperparameters")
                             .get<std::map<std::string, double>>();
  SettingContext setting;
  from_json(j.at("setting"), setting);
  MethodInstance m = configure(desc, setting);
  const auto& state = j.at("state");
  m.multihead_ = state.at("multihead").get<bool>();
  m.active_head_ = state.at("active_head").get<int>();
  m.switches_ = state.at("switches").get<int>();
  m.updates_ = state.at("updates").get<long long>();
  if (setting.spaces.branch == Branch::Passive) {
    m.trunk_ = net_from_json(state.at("trunk"));
    m.head_w_.clear();
    m.head_b_.clear();
    m.head_trained_.clear();
    for (const auto& h : state.at("heads")) {
      Matrix w(h.at("rows").get<int>(), h.at("cols").get<int>());
      w.v = h.at("w").get<std::vector<double>>();
      m.head_w_.push_back(std::move(w));
      m.head_b_.push_back(h.at("b").get<std::vector<double>>());
      m.head_trained_.push_back(h.at("trained").get<bool>() ? 1 : 0);
    }
    m.ewc_anchors_.clear();
    for (const auto& a : state.at("ewc_anchors")) {
      m.ewc_anchors_.emplace_back(a.at("theta").get<std::vector<double>>(),
                                  a.at("fisher").get<std::vector<double>>());
    }
    std::vector<SlItem> items;
    for (const auto& it : state.at("replay").at("items")) {
      SlItem item;
      item.x = it.at("x").get<std::vector<double>>();
      item.label = it.at("label").get<int>();
      item.task = it.at("task").get<int>();
      items.push_back(std::move(item));
    }
    m.sl_replay_.assign(std::move(items),
                        state.at("replay").at("inserted").get<long long>());
  } else {
    m.q_tables_.clear();
    for (const auto& t : state.at("q_tables"))
      m.q_tables_.push_back(qtable_from_json(t));
    m.q_anchors_.clear();
    for (const auto& a : state.at("q_anchors")) {
      QAnchor anchor;
      for (const auto& t : a.at("tables"))
        anchor.tables.push_back(qtable_from_json(t));
      anchor.max_visit = a.at("max_visit").get<long long>();
      m.q_anchors_.push_back(std::move(anchor));
    }
    std::vector<Transition> items;
    for (const auto& it : state.at("replay").at("items")) {
      Transition t;
      t.s = it.at("s").get<std::uint64_t>();
      t.a = it.at("a").get<int>();
      t.r = it.at("r").get<double>();
      t.s_next = it.at("s_next").get<std::uint64_t>();
      t.done = it.at("done").get<bool>();
      t.head = it.at("head").get<int>();
      items.push_back(t);
    }
    m.rl_replay_.assign(std::move(items),
                        state.at("replay").at("inserted").get<long long>());
  }
  return m;
}

}  // namespace cl
