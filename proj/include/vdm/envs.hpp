#pragma once

#include <memory>
#include <string>

#include "vdm/env.hpp"
#include "vdm/gridworlds.hpp"
#include "vdm/noisy_digits.hpp"

namespace vdm {

struct EnvParams {
  std::string name;  // noisy_digits | two_roads | stoch_grid
  double sticky_tau = 0.0;
  NoisyDigitsConfig noisy;

  bool operator==(const EnvParams& o) const {
    return name == o.name && sticky_tau == o.sticky_tau &&
           noisy.num_classes == o.noisy.num_classes && noisy.style_dim == o.noisy.style_dim &&
           noisy.style_std == o.noisy.style_std && noisy.episode_len == o.noisy.episode_len;
  }
};

inline std::unique_ptr<Env> make_env(const EnvParams& params, std::uint64_t seed) {
  std::unique_ptr<Env> env;
  if (params.name == "noisy_digits") {
    env = std::make_unique<NoisyDigitsEnv>(params.noisy, seed);
  } else if (params.name == "two_roads") {
    env = std::make_unique<TwoRoadsEnv>(seed);
  } else if (params.name == "stoch_grid") {
    env = std::make_unique<StochGridEnv>(seed);
  } else {
    throw ConfigError("make_env: unknown environment '" + params.name + "'");
  }
  if (params.sticky_tau > 0.0) {
    env = std::make_unique<StickyEnv>(std::move(env), params.sticky_tau,
                                      Rng::child(seed, 0x5715cUL).next_u64());
  }
  return env;
}

}  // namespace vdm
