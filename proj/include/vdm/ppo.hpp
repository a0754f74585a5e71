#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "vdm/env.hpp"
#include "vdm/features.hpp"
#include "vdm/intrinsic.hpp"
#include "vdm/net.hpp"

namespace vdm {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double lr = 1e-4;
  double entropy_coef = 1e-3;
  double value_coef = 0.5;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatches = 4;
  int actors = 8;
  int horizon = 128;  // T steps per actor per rollout
  int hidden = 64;
  int trunk_layers = 2;
  int actor_threads = 1;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0)) {
      throw ConfigError("PpoConfig: gamma/lambda must lie in [0, 1]");
    }
    if (!(clip_eps > 0.0)) throw ConfigError("PpoConfig: clip_eps must be > 0");
    if (actors < 1 || horizon < 1) throw ConfigError("PpoConfig: actors/horizon must be >= 1");
  }
};

// Shared-trunk actor-critic with softmax policy and scalar value head. The
// final policy layer is zero-initialized so the initial policy is uniform.
class PolicyNet {
 public:
  PolicyNet(int obs_dim, int num_actions, const PpoConfig& cfg, std::uint64_t seed)
      : obs_dim_(obs_dim), num_actions_(num_actions) {
    std::vector<int> widths{obs_dim};
    std::vector<Act> acts;
    for (int i = 0; i < cfg.trunk_layers; ++i) {
      widths.push_back(cfg.hidden);
      acts.push_back(Act::Tanh);
    }
    trunk_ = Mlp(params_, "trunk", widths, acts);
    pi_ = add_dense(params_, "pi", cfg.hidden, num_actions);
    v_ = add_dense(params_, "v", cfg.hidden, 1);
    Rng rng(seed);
    params_.init_glorot(rng);
    params_.zero_param(pi_.W);
    params_.zero_param(pi_.b);
    grads_.emplace(params_);
  }

  int obs_dim() const { return obs_dim_; }
  int num_actions() const { return num_actions_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  Grads& grads() { return *grads_; }

  template <class Ctx>
  std::pair<typename Ctx::V, typename Ctx::S> forward(Ctx& cx, const Vec& obs) const {
    auto h = trunk_.forward(cx, obs);
    auto logits = cx.affine(pi_.W, pi_.b, h);
    auto value = cx.pick(cx.affine(v_.W, v_.b, std::move(h)), 0);
    return {std::move(logits), std::move(value)};
  }

  struct ActResult {
    int action = 0;
    double logp = 0.0;
    double value = 0.0;
  };

  // Samples from the softmax; exact log-probability and value estimate.
  ActResult act(const Vec& obs, Rng& rng) const {
    EvalCtx cx(params_);
    auto [logits, value] = forward(cx, obs);
    Vec probs;
    kernels::softmax(logits, probs);
    double u = rng.uniform();
    int action = num_actions_ - 1;
    double cdf = 0.0;
    for (int i = 0; i < num_actions_; ++i) {
      cdf += probs[static_cast<std::size_t>(i)];
      if (u < cdf) {
        action = i;
        break;
      }
    }
    return ActResult{action, kernels::log_softmax_pick(logits, action), value};
  }

  double entropy_at(const Vec& obs) const {
    EvalCtx cx(params_);
    auto [logits, value] = forward(cx, obs);
    (void)value;
    return kernels::entropy(logits);
  }

 private:
  int obs_dim_, num_actions_;
  ParamSet params_;
  Mlp trunk_;
  DenseIds pi_, v_;
  std::optional<Grads> grads_;
};

// One environment worker: owns its env instance and rng stream.
struct Actor {
  std::unique_ptr<Env> env;
  Rng rng;
  EnvObservation obs;
  double episode_extrinsic = 0.0;

  void start() {
    obs = env->reset();
    episode_extrinsic = 0.0;
  }
};

struct StepRecord {
  Vec obs_norm;
  int action = 0;
  double logp = 0.0;
  double value = 0.0;
  double reward_raw = 0.0;   // intrinsic, pre-normalization
  double reward_norm = 0.0;  // what PPO trains on
  bool done = false;
};

// T steps x N actors of experience plus the evaluation-only channel.
// Training fields never contain extrinsic rewards.
struct RolloutBatch {
  int actors = 0;
  int horizon = 0;
  std::vector<StepRecord> steps;        // actor-major: [a * horizon + t]
  std::vector<Transition> transitions;  // same order
  std::vector<double> bootstrap_value;  // per actor
  // evaluation channel
  double extrinsic_step_sum = 0.0;
  double episode_return_sum = 0.0;
  int episodes_completed = 0;
  std::vector<int> visited_keys;  // state keys in visit order, per actor blocks

  const StepRecord& at(int actor, int t) const {
    return steps[static_cast<std::size_t>(actor) * horizon + t];
  }
};

// Intrinsic reward against frozen snapshots; never sees extrinsic rewards.
using IntrinsicFn = std::function<double(const Transition&, Rng&)>;

namespace detail {

struct ActorSlice {
  std::vector<StepRecord> steps;
  std::vector<Transition> transitions;
  double bootstrap = 0.0;
  double extrinsic_step_sum = 0.0;
  double episode_return_sum = 0.0;
  int episodes_completed = 0;
  std::vector<int> visited_keys;
};

inline void run_actor(Actor& actor, const PolicyNet& policy, const ObsNormalizer& norm,
                      const FeatureMap* features, const IntrinsicFn& intrinsic, int horizon,
                      ActorSlice& out) {
  out.steps.reserve(static_cast<std::size_t>(horizon));
  out.transitions.reserve(static_cast<std::size_t>(horizon));
  if (actor.obs.state.empty() || actor.obs.episode_done) actor.start();
  Vec xobs = norm.apply(actor.obs.state);
  Vec xfeat = features ? (*features)(xobs) : xobs;
  for (int t = 0; t < horizon; ++t) {
    PolicyNet::ActResult act = policy.act(xobs, actor.rng);
    EnvObservation next = actor.env->step(act.action);
    out.visited_keys.push_back(actor.env->state_key());

    Vec xnext = norm.apply(next.state);
    Vec xnext_feat = features ? (*features)(xnext) : xnext;

    Transition tr;
    tr.s = xobs;
    tr.action = act.action;
    tr.sp = xnext;
    tr.xs = xfeat;
    tr.xsp = xnext_feat;
    tr.a_onehot = one_hot(act.action, actor.env->action_spec().n);

    StepRecord rec;
    rec.obs_norm = xobs;
    rec.action = act.action;
    rec.logp = act.logp;
    rec.value = act.value;
    rec.reward_raw = intrinsic ? intrinsic(tr, actor.rng) : 0.0;
    rec.done = next.episode_done;

    out.steps.push_back(std::move(rec));
    out.transitions.push_back(std::move(tr));

    out.extrinsic_step_sum += next.extrinsic_reward;
    actor.episode_extrinsic += next.extrinsic_reward;
    if (next.episode_done) {
      out.episodes_completed += 1;
      out.episode_return_sum += actor.episode_extrinsic;
      actor.start();
      out.visited_keys.push_back(actor.env->state_key());
    } else {
      actor.obs = std::move(next);
    }
    xobs = norm.apply(actor.obs.state);
    xfeat = features ? (*features)(xobs) : xobs;
  }
  EvalCtx cx(policy.params());
  auto [logits, value] = policy.forward(cx, xobs);
  (void)logits;
  out.bootstrap = value;
}

}  // namespace detail

// Collects T steps from each actor against frozen policy/model snapshots.
// Actors are independent (own env, own rng stream), so they may run on
// several threads; the merged batch is identical for any thread count.
inline RolloutBatch collect_rollouts(std::vector<Actor>& actors, const PolicyNet& policy,
                                     const ObsNormalizer& norm, const FeatureMap* features,
                                     const IntrinsicFn& intrinsic, int horizon, int threads = 1) {
  int n = static_cast<int>(actors.size());
  std::vector<detail::ActorSlice> slices(static_cast<std::size_t>(n));
  auto work = [&](int a) {
    detail::run_actor(actors[static_cast<std::size_t>(a)], policy, norm, features, intrinsic,
                      horizon, slices[static_cast<std::size_t>(a)]);
  };
  if (threads <= 1 || n <= 1) {
    for (int a = 0; a < n; ++a) work(a);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next_actor{0};
    int nthreads = std::min(threads, n);
    for (int w = 0; w < nthreads; ++w) {
      pool.emplace_back([&]() {
        for (int a = next_actor.fetch_add(1); a < n; a = next_actor.fetch_add(1)) work(a);
      });
    }
    for (auto& th : pool) th.join();
  }

  RolloutBatch batch;
  batch.actors = n;
  batch.horizon = horizon;
  batch.steps.reserve(static_cast<std::size_t>(n) * horizon);
  batch.transitions.reserve(static_cast<std::size_t>(n) * horizon);
  for (auto& slice : slices) {
    for (auto& s : slice.steps) batch.steps.push_back(std::move(s));
    for (auto& t : slice.transitions) batch.transitions.push_back(std::move(t));
    batch.bootstrap_value.push_back(slice.bootstrap);
    batch.extrinsic_step_sum += slice.extrinsic_step_sum;
    batch.episode_return_sum += slice.episode_return_sum;
    batch.episodes_completed += slice.episodes_completed;
    batch.visited_keys.insert(batch.visited_keys.end(), slice.visited_keys.begin(),
                              slice.visited_keys.end());
  }
  return batch;
}

// Folds the batch's raw intrinsic rewards into the running normalizer in
// time-major order, then fills reward_norm with the rescaled values.
inline void normalize_batch_rewards(RolloutBatch& batch, RunningRewardStd& stat) {
  for (int t = 0; t < batch.horizon; ++t) {
    for (int a = 0; a < batch.actors; ++a) {
      const StepRecord& s = batch.at(a, t);
      stat.observe(a, s.reward_raw, s.done);
    }
  }
  double d = stat.divisor();
  for (auto& s : batch.steps) s.reward_norm = s.reward_raw / d;
}

struct GaeResult {
  Vec advantages;
  Vec returns;
};

// Reverse-recursive generalized advantage estimation per actor; done flags
// cut both the bootstrap and the recursion.
inline GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda) {
  GaeResult res;
  std::size_t total = batch.steps.size();
  res.advantages.assign(total, 0.0);
  res.returns.assign(total, 0.0);
  for (int a = 0; a < batch.actors; ++a) {
    double acc = 0.0;
    double next_value = batch.bootstrap_value[static_cast<std::size_t>(a)];
    for (int t = batch.horizon - 1; t >= 0; --t) {
      std::size_t i = static_cast<std::size_t>(a) * batch.horizon + t;
      const StepRecord& s = batch.steps[i];
      double nonterminal = s.done ? 0.0 : 1.0;
      double delta = s.reward_norm + gamma * next_value * nonterminal - s.value;
      acc = delta + gamma * lambda * nonterminal * acc;
      res.advantages[i] = acc;
      res.returns[i] = acc + s.value;
      next_value = s.value;
    }
  }
  return res;
}

// In-place normalization to mean 0 / std 1 (population std, floored so a
// constant batch maps to zeros).
inline void normalize_advantages(Vec& adv) {
  if (adv.size() < 2) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  double std = std::sqrt(var);
  double denom = std::max(std, 1e-8);
  for (double& a : adv) a = (a - mean) / denom;
}

struct PpoDiagnostics {
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double entropy = 0.0;
  double policy_surrogate = 0.0;
  double value_loss = 0.0;
  int nan_incidents = 0;
};

// Clipped-surrogate update with value regression and entropy bonus:
//   loss = -mean min(r A, clip(r, 1-eps, 1+eps) A)
//          + value_coef * mean (V - returns)^2 - entropy_coef * mean H.
// Advantages are normalized within each minibatch.
inline PpoDiagnostics ppo_update(PolicyNet& policy, const RolloutBatch& batch,
                                 const GaeResult& gae, const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  std::size_t total = batch.steps.size();
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);

  PpoDiagnostics diag;
  int diag_batches = 0;
  std::int64_t clipped = 0, counted = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t chunk = (total + cfg.minibatches - 1) / cfg.minibatches;
    for (std::size_t start = 0; start < total; start += chunk) {
      std::size_t end = std::min(start + chunk, total);
      std::size_t m = end - start;

      Vec adv(m);
      for (std::size_t j = 0; j < m; ++j) {
        adv[j] = gae.advantages[static_cast<std::size_t>(order[start + j])];
      }
      normalize_advantages(adv);

      Tape tape(policy.params());
      GradCtx cx(tape);
      std::vector<NodeId> losses;
      losses.reserve(m);
      double ent_sum = 0.0, kl_sum = 0.0, surr_sum = 0.0, vloss_sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const StepRecord& s = batch.steps[static_cast<std::size_t>(order[start + j])];
        auto [logits, value] = policy.forward(cx, s.obs_norm);
        NodeId logp = cx.log_softmax_pick(logits, s.action);
        NodeId ratio = cx.s_exp(cx.s_add_const(logp, -s.logp));
        NodeId surr = cx.s_min(cx.s_mul_const(ratio, adv[j]),
                               cx.s_mul_const(cx.s_clamp(ratio, 1.0 - cfg.clip_eps,
                                                         1.0 + cfg.clip_eps),
                                              adv[j]));
        NodeId vdiff = cx.s_add_const(value, -gae.returns[static_cast<std::size_t>(order[start + j])]);
        NodeId vloss = cx.s_mul(vdiff, vdiff);
        NodeId ent = cx.entropy(logits);
        losses.push_back(cx.s_sum({cx.s_mul_const(surr, -1.0),
                                   cx.s_mul_const(vloss, cfg.value_coef),
                                   cx.s_mul_const(ent, -cfg.entropy_coef)},
                                  1.0));
        double r = std::exp(tape.scalar(logp) - s.logp);
        if (std::abs(r - 1.0) > cfg.clip_eps) clipped += 1;
        counted += 1;
        kl_sum += (r - 1.0) - (tape.scalar(logp) - s.logp);
        ent_sum += tape.scalar(ent);
        surr_sum += tape.scalar(surr);
        vloss_sum += tape.scalar(vloss);
      }
      NodeId loss = cx.s_sum(losses, 1.0 / static_cast<double>(m));
      double loss_val = tape.scalar(loss);
      if (!std::isfinite(loss_val)) {
        diag.nan_incidents += 1;
        std::fprintf(stderr, "[ppo] non-finite minibatch loss, update skipped\n");
        continue;
      }
      policy.grads().zero();
      tape.backward(loss, policy.grads());
      adam_step(policy.params(), policy.grads(), cfg.lr);

      diag.entropy += ent_sum / static_cast<double>(m);
      diag.approx_kl += kl_sum / static_cast<double>(m);
      diag.policy_surrogate += surr_sum / static_cast<double>(m);
      diag.value_loss += vloss_sum / static_cast<double>(m);
      diag_batches += 1;
    }
  }
  if (diag_batches > 0) {
    diag.entropy /= diag_batches;
    diag.approx_kl /= diag_batches;
    diag.policy_surrogate /= diag_batches;
    diag.value_loss /= diag_batches;
  }
  diag.clip_fraction = counted > 0 ? static_cast<double>(clipped) / counted : 0.0;
  return diag;
}

}  // namespace vdm
