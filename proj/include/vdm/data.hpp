#pragma once

#include <vector>

#include "vdm/dynamics.hpp"
#include "vdm/envs.hpp"
#include "vdm/features.hpp"

namespace vdm {

// Random-policy transitions in raw state space (xs/xsp alias the raw states).
inline std::vector<Transition> collect_raw_transitions(Env& env, int n, Rng& rng) {
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(n));
  int num_actions = env.action_spec().n;
  EnvObservation obs = env.reset();
  while (static_cast<int>(out.size()) < n) {
    if (obs.episode_done) obs = env.reset();
    Transition t;
    t.s = obs.state;
    t.action = rng.uniform_int(num_actions);
    t.a_onehot = one_hot(t.action, num_actions);
    obs = env.step(t.action);
    t.sp = obs.state;
    t.xs = t.s;
    t.xsp = t.sp;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace vdm
