#include "cl/envsim/cartpole.hpp"

#include <cmath>

#include "cl/errors.hpp"

namespace cl {

ContextVector sample_task_cartpole(Rng& rng) {
  ContextVector context;
  for (int i = 0; i < 4; ++i) context.values.push_back(rng.log_uniform(0.5, 2.0));
  return context;
}

ContextVector cartpole_identity_context() {
  ContextVector context;
  context.values = {1.0, 1.0, 1.0, 1.0};
  return context;
}

CartPoleParams cartpole_params_for(const ContextVector& context) {
  CartPoleParams p;
  if (context.values.size() >= 4) {
    p.gravity *= context.values[0];
    p.cart_mass *= context.values[1];
    p.pole_mass *= context.values[2];
    p.pole_half_length *= context.values[3];
  }
  return p;
}

CartPoleStepOut step_cartpole(const CartPoleState& state, int action,
                              const ContextVector& context) {
  if (!std::isfinite(state.x) || !std::isfinite(state.x_dot) ||
      !std::isfinite(state.theta) || !std::isfinite(state.theta_dot)) {
    throw RunError("cart-pole state is non-finite (integration blow-up)");
  }
  const CartPoleParams p = cartpole_params_for(context);
  const double force = action == 1 ? p.force_mag : -p.force_mag;
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pole_mass_length = p.pole_mass * p.pole_half_length;

  const double cos_t = std::cos(state.theta);
  const double sin_t = std::sin(state.theta);
  const double temp =
      (force + pole_mass_length * state.theta_dot * state.theta_dot * sin_t) /
      total_mass;
  const double theta_acc =
      (p.gravity * sin_t - cos_t * temp) /
      (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  CartPoleStepOut out;
  out.next.x_dot = state.x_dot + p.tau * x_acc;
  out.next.x = state.x + p.tau * out.next.x_dot;
  out.next.theta_dot = state.theta_dot + p.tau * theta_acc;
  out.next.theta = state.theta + p.tau * out.next.theta_dot;
  out.reward = 1.0;
  out.done = std::abs(out.next.theta) > p.angle_limit ||
             std::abs(out.next.x) > p.position_limit;
  return out;
}

TaskSampler cartpole_task_sampler() {
  TaskSampler sampler;
  sampler.continuous = true;
  sampler.sample = [](int, Rng& rng) { return sample_task_cartpole(rng).values; };
  return sampler;
}

}  // namespace cl
