#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "vdm/dynamics.hpp"
#include "vdm/gaussian.hpp"

namespace vdm {

struct RewardConfig {
  int k = 10;
  bool normalize = true;
};

// Importance-weighted intrinsic reward:
//   r_k = -( logsumexp_i [ log p(s'|s,a,z_i) + log p(z_i|s,a) - log q(z_i|s,a,s') ] - log k )
// with z_1..z_k drawn from the posterior. Computed entirely in log space; the
// naive arithmetic mean of the weights underflows for realistic likelihood
// magnitudes. Pure function of (model snapshot, transition, rng state).
inline double intrinsic_reward_k(const VdmModel& model, const Transition& t, int k, Rng& rng) {
  if (k < 1) throw ConfigError("intrinsic_reward_k: k must be >= 1");
  DiagGaussian q = model.posterior(t.xs, t.a_onehot, t.xsp);
  VdmModel::PriorEval prior = model.prior_eval(t.xs, t.a_onehot);
  Vec log_w(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    Vec z = reparam_sample(q, rng.normal_vec(q.mean.size()));
    DiagGaussian g = model.generate_with_hidden(prior.hidden, z);
    log_w[static_cast<std::size_t>(i)] =
        gaussian_log_prob(t.xsp, g) + gaussian_log_prob(z, prior.dist) - gaussian_log_prob(z, q);
  }
  return -(logsumexp(log_w) - std::log(static_cast<double>(k)));
}

// Evaluates r_k for several k values on shared z-draw prefixes (common random
// numbers), so the k-monotonicity of the bound can be tested with paired
// differences. ks must be sorted ascending.
inline Vec intrinsic_reward_prefixes(const VdmModel& model, const Transition& t,
                                     const std::vector<int>& ks, Rng& rng) {
  if (ks.empty() || ks.front() < 1) throw ConfigError("intrinsic_reward_prefixes: bad k list");
  int kmax = ks.back();
  DiagGaussian q = model.posterior(t.xs, t.a_onehot, t.xsp);
  VdmModel::PriorEval prior = model.prior_eval(t.xs, t.a_onehot);
  Vec log_w(static_cast<std::size_t>(kmax));
  for (int i = 0; i < kmax; ++i) {
    Vec z = reparam_sample(q, rng.normal_vec(q.mean.size()));
    DiagGaussian g = model.generate_with_hidden(prior.hidden, z);
    log_w[static_cast<std::size_t>(i)] =
        gaussian_log_prob(t.xsp, g) + gaussian_log_prob(z, prior.dist) - gaussian_log_prob(z, q);
  }
  Vec out;
  out.reserve(ks.size());
  for (int k : ks) {
    Vec prefix(log_w.begin(), log_w.begin() + k);
    out.push_back(-(logsumexp(prefix) - std::log(static_cast<double>(k))));
  }
  return out;
}

// Running standard deviation of the per-actor discounted reward accumulator.
// The accumulator resets at episode boundaries; the variance estimate never
// resets.
class RunningRewardStd {
 public:
  RunningRewardStd() = default;

  RunningRewardStd(int actors, double gamma) : gamma_(gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
      throw ConfigError("RunningRewardStd: gamma must lie in [0, 1)");
    }
    accum_.assign(static_cast<std::size_t>(actors), 0.0);
  }

  void observe(int actor, double reward, bool episode_done) {
    if (static_cast<std::size_t>(actor) >= accum_.size()) {
      accum_.resize(static_cast<std::size_t>(actor) + 1, 0.0);
    }
    double& acc = accum_[static_cast<std::size_t>(actor)];
    acc = gamma_ * acc + reward;
    n_ += 1;
    double delta = acc - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (acc - mean_);
    if (episode_done) acc = 0.0;
  }

  double running_std() const {
    return n_ > 0 ? std::sqrt(m2_ / static_cast<double>(n_)) : 0.0;
  }

  // Divisor floored at 1e-8 so all-zero streams normalize to zero.
  double divisor() const { return std::max(running_std(), 1e-8); }

  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << gamma_ << ' ' << n_ << ' ' << mean_ << ' ' << m2_ << ' ' << accum_.size();
    for (double a : accum_) os << ' ' << a;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    std::size_t na = 0;
    is >> gamma_ >> n_ >> mean_ >> m2_ >> na;
    accum_.assign(na, 0.0);
    for (double& a : accum_) is >> a;
    if (!is) throw DomainError("RunningRewardStd::deserialize: malformed state");
  }

 private:
  double gamma_ = 0.99;
  Vec accum_;
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Normalizes a single-actor reward stream: folds every step into the running
// statistics first, then divides by the updated running std. `dones` may be
// empty (no episode boundaries).
inline Vec normalize_rewards(const Vec& raw, RunningRewardStd& state,
                             const std::vector<char>& dones = {}) {
  if (!dones.empty() && dones.size() != raw.size()) {
    throw DomainError("normalize_rewards: dones length mismatch");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    state.observe(0, raw[i], dones.empty() ? false : dones[i] != 0);
  }
  Vec out(raw.size());
  double d = state.divisor();
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / d;
  return out;
}

}  // namespace vdm
