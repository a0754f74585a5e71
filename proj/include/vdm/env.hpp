#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "vdm/common.hpp"
#include "vdm/rng.hpp"

namespace vdm {

struct ActionSpec {
  enum class Kind { Discrete };
  Kind kind = Kind::Discrete;
  int n = 0;  // number of discrete actions, >= 2

  void validate() const {
    if (kind == Kind::Discrete && n < 2) {
      throw ConfigError("ActionSpec: discrete action count must be >= 2");
    }
  }
};

// extrinsic_reward is an evaluation-only channel: nothing on the training
// path may read it.
struct EnvObservation {
  Vec state;
  bool episode_done = false;
  double extrinsic_reward = 0.0;
};

class Env {
 public:
  virtual ~Env() = default;

  virtual const ActionSpec& action_spec() const = 0;
  virtual int obs_dim() const = 0;
  virtual EnvObservation reset() = 0;
  virtual EnvObservation step(int action) = 0;

  // Discretized id of the current state (grid cell / class index), used for
  // coverage accounting.
  virtual int state_key() const = 0;
  virtual int state_key_count() const = 0;

  // Exact transition log-likelihood, available on oracle-equipped
  // environments only.
  virtual bool has_oracle() const { return false; }
  virtual double oracle_logprob(const Vec& /*s*/, int /*action*/, const Vec& /*sp*/) const {
    throw UnsupportedError("oracle_logprob: environment has no likelihood oracle");
  }

 protected:
  void check_step_allowed(bool done, int action) const {
    if (done) throw UsageError("Env::step: episode is done; call reset first");
    const ActionSpec& spec = action_spec();
    if (action < 0 || action >= spec.n) {
      throw UsageError("Env::step: action " + std::to_string(action) + " out of range");
    }
  }
};

// Sticky-action wrapper: with probability tau the previously executed action
// is repeated in place of the chosen one. The first step of each episode
// always executes the chosen action.
class StickyEnv : public Env {
 public:
  StickyEnv(std::unique_ptr<Env> inner, double tau, std::uint64_t seed)
      : inner_(std::move(inner)), tau_(tau), rng_(seed) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
      throw ConfigError("StickyEnv: tau must lie in [0, 1]");
    }
    inner_->action_spec().validate();
  }

  const ActionSpec& action_spec() const override { return inner_->action_spec(); }
  int obs_dim() const override { return inner_->obs_dim(); }
  int state_key() const override { return inner_->state_key(); }
  int state_key_count() const override { return inner_->state_key_count(); }
  bool has_oracle() const override { return inner_->has_oracle(); }
  double oracle_logprob(const Vec& s, int a, const Vec& sp) const override {
    return inner_->oracle_logprob(s, a, sp);
  }

  EnvObservation reset() override {
    prev_executed_ = -1;
    return inner_->reset();
  }

  EnvObservation step(int action) override {
    int executed = action;
    if (prev_executed_ >= 0 && rng_.uniform() < tau_) executed = prev_executed_;
    prev_executed_ = executed;
    last_executed_ = executed;
    EnvObservation obs = inner_->step(executed);
    if (obs.episode_done) prev_executed_ = -1;
    return obs;
  }

  int last_executed_action() const { return last_executed_; }

 private:
  std::unique_ptr<Env> inner_;
  double tau_;
  Rng rng_;
  int prev_executed_ = -1;
  int last_executed_ = -1;
};

// Per-dimension whitening fitted from a random-policy pre-run, then frozen.
class ObsNormalizer {
 public:
  ObsNormalizer() = default;
  ObsNormalizer(Vec mean, Vec std, std::int64_t count)
      : mean_(std::move(mean)), std_(std::move(std)), count_(count) {
    for (double& s : std_) s = std::max(s, 1e-6);
  }

  // Identity normalizer of a given width.
  static ObsNormalizer identity(int dim) {
    return ObsNormalizer(Vec(static_cast<std::size_t>(dim), 0.0),
                         Vec(static_cast<std::size_t>(dim), 1.0), 0);
  }

  Vec apply(const Vec& x) const {
    if (x.size() != mean_.size()) throw ConfigError("ObsNormalizer: dimension mismatch");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean_[i]) / std_[i];
    return out;
  }

  const Vec& mean() const { return mean_; }
  const Vec& std() const { return std_; }
  std::int64_t count() const { return count_; }

 private:
  Vec mean_;
  Vec std_;
  std::int64_t count_ = 0;
};

// Random-policy rollout of `steps` steps; Welford moments per dimension.
inline ObsNormalizer fit_normalizer(Env& env, int steps, Rng& rng) {
  if (steps < 100) throw ConfigError("fit_normalizer: needs at least 100 steps");
  EnvObservation obs = env.reset();
  std::size_t d = obs.state.size();
  Vec mean(d, 0.0), m2(d, 0.0);
  std::int64_t n = 0;
  auto push = [&](const Vec& x) {
    n += 1;
    for (std::size_t i = 0; i < d; ++i) {
      double delta = x[i] - mean[i];
      mean[i] += delta / static_cast<double>(n);
      m2[i] += delta * (x[i] - mean[i]);
    }
  };
  push(obs.state);
  for (int t = 0; t < steps; ++t) {
    if (obs.episode_done) obs = env.reset();
    obs = env.step(rng.uniform_int(env.action_spec().n));
    push(obs.state);
  }
  Vec std(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    std[i] = n > 1 ? std::sqrt(m2[i] / static_cast<double>(n - 1)) : 0.0;
  }
  return ObsNormalizer(std::move(mean), std::move(std), n);
}

}  // namespace vdm
