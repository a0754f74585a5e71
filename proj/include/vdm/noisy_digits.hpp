#pragma once

#include <array>
#include <cmath>

#include "vdm/env.hpp"
#include "vdm/gaussian.hpp"

namespace vdm {

// Vector analog of the Noisy-Mnist MDP: the state is a class one-hot block
// followed by a continuous style block resampled i.i.d. every step. The
// class graph is a noisy cycle: 0 -> 1 deterministically, 1 -> uniform over
// {2..9}, and 2..9 -> 0. Actions do not influence the dynamics.
struct NoisyDigitsConfig {
  int num_classes = 10;
  int style_dim = 6;
  double style_std = 0.3;
  int episode_len = 50;
  int num_actions = 2;  // dummy actions; dynamics ignore them
  // Optional dequantization of the class block: with a positive jitter the
  // one-hot coordinates carry Gaussian noise, the state is fully continuous,
  // and the oracle becomes an exact 10-component mixture. Density bounds for
  // continuous models against the oracle only hold in this variant; an
  // exactly discrete block admits unbounded density concentration.
  double class_jitter_std = 0.0;
};

class NoisyDigitsEnv : public Env {
 public:
  // Log-probability sentinel for transitions the class graph forbids.
  static constexpr double kImpossible = -1e9;

  NoisyDigitsEnv(const NoisyDigitsConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    if (cfg_.style_std <= 0.0) throw ConfigError("NoisyDigits: style_std must be > 0");
    if (cfg_.style_dim < 1) throw ConfigError("NoisyDigits: style_dim must be >= 1");
    spec_ = ActionSpec{ActionSpec::Kind::Discrete, cfg_.num_actions};
    spec_.validate();
  }

  const ActionSpec& action_spec() const override { return spec_; }
  int obs_dim() const override { return cfg_.num_classes + cfg_.style_dim; }
  int state_key() const override { return cls_; }
  int state_key_count() const override { return cfg_.num_classes; }
  bool has_oracle() const override { return true; }

  EnvObservation reset() override {
    cls_ = 0;
    resample_style();
    t_ = 0;
    done_ = false;
    return make_obs(false, 0.0);
  }

  EnvObservation step(int action) override {
    check_step_allowed(done_, action);
    cls_ = sample_next_class(cls_, rng_);
    resample_style();
    t_ += 1;
    done_ = t_ >= cfg_.episode_len;
    return make_obs(done_, 0.0);
  }

  // Exact log p(s'|s,a): class-transition probability plus the style-block
  // Gaussian log-density. Forbidden class moves return kImpossible. With
  // class jitter the class term is the exact mixture over successor classes.
  double oracle_logprob(const Vec& s, int /*action*/, const Vec& sp) const override {
    int from = class_of(s);
    double acc = 0.0;
    if (cfg_.class_jitter_std > 0.0) {
      Vec log_terms;
      for (int to = 0; to < cfg_.num_classes; ++to) {
        double pc = class_transition_prob(from, to);
        if (pc <= 0.0) continue;
        double lp = std::log(pc);
        for (int j = 0; j < cfg_.num_classes; ++j) {
          double mean = to == j ? 1.0 : 0.0;
          double z = (sp[static_cast<std::size_t>(j)] - mean) / cfg_.class_jitter_std;
          lp += -0.5 * kLogTwoPi - std::log(cfg_.class_jitter_std) - 0.5 * z * z;
        }
        log_terms.push_back(lp);
      }
      if (log_terms.empty()) return kImpossible;
      acc = logsumexp(log_terms);
    } else {
      double pc = class_transition_prob(from, class_of(sp));
      if (pc <= 0.0) return kImpossible;
      acc = std::log(pc);
    }
    for (int j = 0; j < cfg_.style_dim; ++j) {
      double x = sp[static_cast<std::size_t>(cfg_.num_classes + j)];
      double z = x / cfg_.style_std;
      acc += -0.5 * kLogTwoPi - std::log(cfg_.style_std) - 0.5 * z * z;
    }
    return acc;
  }

  double class_transition_prob(int from, int to) const {
    if (from == 0) return to == 1 ? 1.0 : 0.0;
    if (from == 1) return to >= 2 && to <= 9 ? 1.0 / 8.0 : 0.0;
    return to == 0 ? 1.0 : 0.0;
  }

  int class_of(const Vec& state) const { return argmax(state, 0, cfg_.num_classes); }

  const NoisyDigitsConfig& config() const { return cfg_; }

  static int sample_next_class(int cls, Rng& rng) {
    if (cls == 0) return 1;
    if (cls == 1) return 2 + rng.uniform_int(8);
    return 0;
  }

 private:
  void resample_style() {
    style_.assign(static_cast<std::size_t>(cfg_.style_dim), 0.0);
    for (double& x : style_) x = rng_.normal(0.0, cfg_.style_std);
  }

  EnvObservation make_obs(bool done, double reward) {
    EnvObservation obs;
    obs.state = one_hot(cls_, cfg_.num_classes);
    if (cfg_.class_jitter_std > 0.0) {
      for (int j = 0; j < cfg_.num_classes; ++j) {
        obs.state[static_cast<std::size_t>(j)] += rng_.normal(0.0, cfg_.class_jitter_std);
      }
    }
    obs.state.insert(obs.state.end(), style_.begin(), style_.end());
    obs.episode_done = done;
    obs.extrinsic_reward = reward;
    return obs;
  }

  NoisyDigitsConfig cfg_;
  Rng rng_;
  ActionSpec spec_;
  int cls_ = 0;
  Vec style_;
  int t_ = 0;
  bool done_ = false;
};

}  // namespace vdm
