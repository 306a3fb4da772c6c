#pragma once
#include "cl/envsim/schedule.hpp"
#include "cl/rng.hpp"

namespace cl {

// Classic cart-pole balancing with context-scaled physical constants.
// The context holds four multipliers (gravity, cart mass, pole mass,
// pole length); (1,1,1,1) reproduces the default environment.

struct CartPoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double force_mag = 10.0;
  double tau = 0.02;
  double angle_limit = 0.2094395102393195;  // 12 degrees
  double position_limit = 2.4;
};

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
};

// Multipliers log-uniform in [0.5, 2.0].
ContextVector sample_task_cartpole(Rng& rng);

ContextVector cartpole_identity_context();

CartPoleParams cartpole_params_for(const ContextVector& context);

struct CartPoleStepOut {
  CartPoleState next;
  double reward = 1.0;
  bool done = false;  // pole fell or cart left the track (cap applied by env)
};

// Semi-implicit Euler integration; actions are {0: push left, 1: push
// right}.  Throws RunError on a non-finite state.
CartPoleStepOut step_cartpole(const CartPoleState& state, int action,
                              const ContextVector& context);

TaskSampler cartpole_task_sampler();

}  // namespace cl
