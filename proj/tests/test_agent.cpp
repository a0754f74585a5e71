#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdm/envs.hpp"
#include "vdm/gradcheck.hpp"
#include "vdm/ppo.hpp"

using namespace vdm;

namespace {

// Two-armed bandit: single constant state, one-step episodes. The extrinsic
// channel marks the rewarded arm; training rewards come from the intrinsic
// callback like everywhere else.
class BanditEnv : public Env {
 public:
  BanditEnv() { spec_ = ActionSpec{ActionSpec::Kind::Discrete, 2}; }
  const ActionSpec& action_spec() const override { return spec_; }
  int obs_dim() const override { return 1; }
  int state_key() const override { return 0; }
  int state_key_count() const override { return 1; }
  EnvObservation reset() override {
    done_ = false;
    return EnvObservation{{0.0}, false, 0.0};
  }
  EnvObservation step(int action) override {
    check_step_allowed(done_, action);
    done_ = true;
    return EnvObservation{{0.0}, true, action == 0 ? 1.0 : 0.0};
  }

 private:
  ActionSpec spec_;
  bool done_ = false;
};

// Wrapper that zeroes the evaluation channel; training must be unaffected.
class ZeroExtrinsic : public Env {
 public:
  explicit ZeroExtrinsic(std::unique_ptr<Env> inner) : inner_(std::move(inner)) {}
  const ActionSpec& action_spec() const override { return inner_->action_spec(); }
  int obs_dim() const override { return inner_->obs_dim(); }
  int state_key() const override { return inner_->state_key(); }
  int state_key_count() const override { return inner_->state_key_count(); }
  EnvObservation reset() override { return strip(inner_->reset()); }
  EnvObservation step(int a) override { return strip(inner_->step(a)); }

 private:
  static EnvObservation strip(EnvObservation obs) {
    obs.extrinsic_reward = 0.0;
    return obs;
  }
  std::unique_ptr<Env> inner_;
};

std::vector<Actor> make_actors(int n, std::uint64_t seed, bool strip_extrinsic = false) {
  std::vector<Actor> actors;
  for (int i = 0; i < n; ++i) {
    EnvParams p;
    p.name = "stoch_grid";
    std::unique_ptr<Env> env = make_env(p, seed + static_cast<std::uint64_t>(i));
    if (strip_extrinsic) env = std::make_unique<ZeroExtrinsic>(std::move(env));
    actors.push_back(Actor{std::move(env), Rng::child(seed, 100 + static_cast<std::uint64_t>(i)),
                           EnvObservation{}, 0.0});
  }
  return actors;
}

bool batches_equal(const RolloutBatch& a, const RolloutBatch& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const StepRecord &x = a.steps[i], &y = b.steps[i];
    if (x.obs_norm != y.obs_norm || x.action != y.action || x.logp != y.logp ||
        x.value != y.value || x.reward_raw != y.reward_raw || x.done != y.done) {
      return false;
    }
  }
  return a.bootstrap_value == b.bootstrap_value;
}

}  // namespace

TEST_CASE("act: zero-initialized policy samples uniformly") {
  PpoConfig cfg;
  PolicyNet policy(3, 4, cfg, 1);
  Rng rng(2);
  Vec obs = {0.1, -0.2, 0.5};
  std::array<int, 4> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(policy.act(obs, rng).action)] += 1;
  for (int a = 0; a < 4; ++a) {
    double freq = static_cast<double>(counts[static_cast<std::size_t>(a)]) / n;
    CHECK(std::abs(freq - 0.25) < 0.01);
  }
}

TEST_CASE("act: strongly peaked logits select the argmax almost surely") {
  PpoConfig cfg;
  PolicyNet policy(1, 4, cfg, 3);
  // force logits [10, 0, 0, 0] through the policy head bias
  ParamId pib = policy.params().find("pi.b");
  REQUIRE(pib.valid());
  policy.params().value(pib)(0, 0) = 10.0;
  Rng rng(4);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += policy.act({0.0}, rng).action == 0 ? 1 : 0;
  CHECK(static_cast<double>(hits) / n > 0.999);
}

TEST_CASE("act: returned log-prob equals log softmax at the action") {
  PpoConfig cfg;
  PolicyNet policy(2, 3, cfg, 5);
  ParamId pib = policy.params().find("pi.b");
  policy.params().value(pib)(0, 0) = 0.7;
  policy.params().value(pib)(1, 0) = -0.2;
  Rng rng(6);
  Vec obs = {0.3, -1.0};
  for (int i = 0; i < 20; ++i) {
    auto r = policy.act(obs, rng);
    EvalCtx cx(policy.params());
    auto [logits, v] = policy.forward(cx, obs);
    (void)v;
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    double expect = logits[static_cast<std::size_t>(r.action)] - mx - std::log(z);
    CHECK(std::abs(r.logp - expect) < 1e-12);
  }
}

TEST_CASE("policy entropy at initialization equals log(num_actions)") {
  PpoConfig cfg;
  PolicyNet policy(5, 6, cfg, 7);
  Rng rng(8);
  double h = policy.entropy_at(rng.normal_vec(5));
  CHECK(std::abs(h - std::log(6.0)) / std::log(6.0) < 0.01);
}

TEST_CASE("collect_rollouts: N=2, T=4 yields exactly 8 transitions") {
  PpoConfig cfg;
  auto actors = make_actors(2, 11);
  PolicyNet policy(actors[0].env->obs_dim(), 4, cfg, 12);
  ObsNormalizer norm = ObsNormalizer::identity(actors[0].env->obs_dim());
  RolloutBatch batch = collect_rollouts(actors, policy, norm, nullptr, nullptr, 4);
  CHECK(batch.steps.size() == 8);
  CHECK(batch.transitions.size() == 8);
  CHECK(batch.bootstrap_value.size() == 2);
}

TEST_CASE("collect_rollouts: identical seeds and snapshots give identical batches") {
  PpoConfig cfg;
  PolicyNet policy(42, 4, cfg, 13);
  ObsNormalizer norm = ObsNormalizer::identity(42);
  auto a1 = make_actors(3, 21);
  auto a2 = make_actors(3, 21);
  RolloutBatch b1 = collect_rollouts(a1, policy, norm, nullptr, nullptr, 32);
  RolloutBatch b2 = collect_rollouts(a2, policy, norm, nullptr, nullptr, 32);
  CHECK(batches_equal(b1, b2));
}

TEST_CASE("collect_rollouts: thread count does not change the batch") {
  PpoConfig cfg;
  PolicyNet policy(42, 4, cfg, 14);
  ObsNormalizer norm = ObsNormalizer::identity(42);
  auto a1 = make_actors(4, 31);
  auto a2 = make_actors(4, 31);
  RolloutBatch b1 = collect_rollouts(a1, policy, norm, nullptr, nullptr, 16, 1);
  RolloutBatch b2 = collect_rollouts(a2, policy, norm, nullptr, nullptr, 16, 4);
  CHECK(batches_equal(b1, b2));
  CHECK(b1.visited_keys == b2.visited_keys);
}

TEST_CASE("collect_rollouts: training path is blind to the extrinsic channel") {
  PpoConfig cfg;
  cfg.actors = 2;
  cfg.horizon = 64;
  PolicyNet p1(42, 4, cfg, 15);
  PolicyNet p2(42, 4, cfg, 15);
  ObsNormalizer norm = ObsNormalizer::identity(42);
  auto a1 = make_actors(2, 41, false);
  auto a2 = make_actors(2, 41, true);  // extrinsic channel stubbed to zero
  RolloutBatch b1 = collect_rollouts(a1, p1, norm, nullptr, nullptr, 64);
  RolloutBatch b2 = collect_rollouts(a2, p2, norm, nullptr, nullptr, 64);
  CHECK(batches_equal(b1, b2));
  CHECK(b1.extrinsic_step_sum > 0.0);
  CHECK(b2.extrinsic_step_sum == 0.0);

  GaeResult g1 = compute_gae(b1, cfg.gamma, cfg.lambda);
  GaeResult g2 = compute_gae(b2, cfg.gamma, cfg.lambda);
  Rng r1(5), r2(5);
  ppo_update(p1, b1, g1, cfg, r1);
  ppo_update(p2, b2, g2, cfg, r2);
  for (int i = 0; i < p1.params().count(); ++i) {
    CHECK(p1.params().entries()[static_cast<std::size_t>(i)].value.a ==
          p2.params().entries()[static_cast<std::size_t>(i)].value.a);
  }
}

TEST_CASE("compute_gae: zero rewards and zero values give zero advantages") {
  PpoConfig cfg;
  auto actors = make_actors(2, 51);
  PolicyNet policy(actors[0].env->obs_dim(), 4, cfg, 52);
  policy.params().zero_param(policy.params().find("v.W"));
  policy.params().zero_param(policy.params().find("v.b"));
  ObsNormalizer norm = ObsNormalizer::identity(actors[0].env->obs_dim());
  RolloutBatch batch = collect_rollouts(actors, policy, norm, nullptr, nullptr, 16);
  for (auto& s : batch.steps) s.reward_norm = 0.0;
  GaeResult g = compute_gae(batch, 0.99, 0.95);
  for (double a : g.advantages) CHECK(a == 0.0);
}

TEST_CASE("compute_gae: hand-computed case and telescoping cancellation") {
  RolloutBatch batch;
  batch.actors = 1;
  batch.horizon = 2;
  batch.steps.resize(2);
  batch.steps[0].reward_norm = 1.0;
  batch.steps[1].reward_norm = 1.0;
  batch.steps[0].value = 0.0;
  batch.steps[1].value = 0.0;
  batch.bootstrap_value = {0.0};
  GaeResult g = compute_gae(batch, 1.0, 1.0);
  CHECK(g.advantages[0] == doctest::Approx(2.0));
  CHECK(g.advantages[1] == doctest::Approx(1.0));

  // zero rewards, constant value c, gamma = 1: the TD telescope cancels
  for (auto& s : batch.steps) {
    s.reward_norm = 0.0;
    s.value = 3.7;
  }
  batch.bootstrap_value = {3.7};
  GaeResult g2 = compute_gae(batch, 1.0, 0.7);
  for (double a : g2.advantages) CHECK(a == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("compute_gae: single step reduces to the TD error") {
  RolloutBatch batch;
  batch.actors = 1;
  batch.horizon = 1;
  batch.steps.resize(1);
  batch.steps[0].reward_norm = 0.8;
  batch.steps[0].value = 0.3;
  batch.bootstrap_value = {1.1};
  for (double gamma : {0.5, 0.9, 1.0}) {
    for (double lambda : {0.0, 0.7, 1.0}) {
      GaeResult g = compute_gae(batch, gamma, lambda);
      CHECK(g.advantages[0] == doctest::Approx(0.8 + gamma * 1.1 - 0.3).epsilon(1e-12));
    }
  }
}

TEST_CASE("compute_gae: matches O(T^2) brute force exactly") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    int T = 2 + rng.uniform_int(63);
    int N = 1 + rng.uniform_int(3);
    double gamma = rng.uniform(0.5, 1.0);
    double lambda = rng.uniform(0.5, 1.0);
    RolloutBatch batch;
    batch.actors = N;
    batch.horizon = T;
    batch.steps.resize(static_cast<std::size_t>(N) * T);
    for (auto& s : batch.steps) {
      s.reward_norm = rng.normal();
      s.value = rng.normal();
      s.done = rng.uniform() < 0.15;
    }
    for (int a = 0; a < N; ++a) batch.bootstrap_value.push_back(rng.normal());

    GaeResult g = compute_gae(batch, gamma, lambda);

    // brute force per Eq: A_t = sum_l (gamma*lambda)^l delta_{t+l} with the
    // product of nonterminal masks cutting the sum at episode ends. Each A_t
    // is recomputed from scratch (O(T) per t); the nested evaluation order
    // makes the comparison exact in 64-bit.
    for (int a = 0; a < N; ++a) {
      for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int l = T - 1; l >= t; --l) {
          std::size_t i = static_cast<std::size_t>(a) * T + l;
          const StepRecord& s = batch.steps[i];
          double nonterm = s.done ? 0.0 : 1.0;
          double next_v = l + 1 < T ? batch.steps[i + 1].value
                                    : batch.bootstrap_value[static_cast<std::size_t>(a)];
          double delta = s.reward_norm + gamma * next_v * nonterm - s.value;
          acc = delta + gamma * lambda * nonterm * acc;
        }
        std::size_t i = static_cast<std::size_t>(a) * T + t;
        CHECK(g.advantages[i] == acc);
        CHECK(g.returns[i] == acc + batch.steps[i].value);
      }
    }
  }
}

TEST_CASE("normalize_advantages: batch mean 0 and std 1") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    Vec adv = rng.normal_vec(static_cast<std::size_t>(2 + rng.uniform_int(200)));
    for (double& a : adv) a = a * 3.0 + 1.7;
    normalize_advantages(adv);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-6);
  }
}

TEST_CASE("clipped surrogate equals unclipped inside the trust band") {
  // For |r - 1| <= eps, clamp(r) == r so min(rA, clamp(r)A) == rA.
  ParamSet ps;
  ParamId lp = ps.add("logit", 1, 1);
  ParamId zb = ps.add("zb", 1, 1);
  double eps = 0.2;
  for (double logp_old : {-0.15, 0.0, 0.1}) {
    for (double advantage : {1.3, -0.7}) {
      ps.value(lp)(0, 0) = 0.0;  // new logp = 0, ratio = exp(-logp_old) within band
      Tape tape(ps);
      GradCtx cx(tape);
      NodeId logp = cx.pick(cx.affine(lp, zb, Vec{1.0}), 0);
      NodeId ratio = cx.s_exp(cx.s_add_const(logp, -logp_old));
      double r = tape.scalar(ratio);
      REQUIRE(std::abs(r - 1.0) <= eps);
      NodeId surr = cx.s_min(cx.s_mul_const(ratio, advantage),
                             cx.s_mul_const(cx.s_clamp(ratio, 1 - eps, 1 + eps), advantage));
      CHECK(tape.scalar(surr) == r * advantage);
    }
  }
}

TEST_CASE("clip saturation: positive advantage, ratio beyond band, zero gradient") {
  ParamSet ps;
  ParamId lp = ps.add("logit", 1, 1);
  ParamId zb = ps.add("zb", 1, 1);
  double eps = 0.2;
  double advantage = 0.9;
  double logp_old = -std::log(1.0 + 2.0 * eps);  // ratio = exp(0 - logp_old) = 1 + 2eps
  auto fn = [&](auto& cx) {
    auto logp = cx.pick(cx.affine(lp, zb, Vec{1.0}), 0);
    auto ratio = cx.s_exp(cx.s_add_const(logp, -logp_old));
    return cx.s_min(cx.s_mul_const(ratio, advantage),
                    cx.s_mul_const(cx.s_clamp(ratio, 1 - eps, 1 + eps), advantage));
  };
  {
    EvalCtx cx(ps);
    CHECK(fn(cx) == doctest::Approx((1.0 + eps) * advantage).epsilon(1e-12));
  }
  Grads grads(ps);
  grads.zero();
  Tape tape(ps);
  GradCtx cx(tape);
  NodeId loss = fn(cx);
  tape.backward(loss, grads);
  CHECK(grads[lp](0, 0) == 0.0);
}

TEST_CASE("ppo_update: one update raises the rewarded arm's probability") {
  PpoConfig cfg;
  cfg.actors = 4;
  cfg.horizon = 32;
  cfg.lr = 1e-3;
  std::vector<Actor> actors;
  for (int i = 0; i < cfg.actors; ++i) {
    actors.push_back(Actor{std::make_unique<BanditEnv>(), Rng::child(81, static_cast<std::uint64_t>(i)),
                           EnvObservation{}, 0.0});
  }
  PolicyNet policy(1, 2, cfg, 82);
  ObsNormalizer norm = ObsNormalizer::identity(1);
  IntrinsicFn reward = [](const Transition& t, Rng&) { return t.action == 0 ? 1.0 : 0.0; };
  RolloutBatch batch = collect_rollouts(actors, policy, norm, nullptr, reward, cfg.horizon);
  for (auto& s : batch.steps) s.reward_norm = s.reward_raw;  // no normalization in this test

  auto prob0 = [&]() {
    EvalCtx cx(policy.params());
    auto [logits, v] = policy.forward(cx, Vec{0.0});
    (void)v;
    Vec probs;
    kernels::softmax(logits, probs);
    return probs[0];
  };
  double before = prob0();
  GaeResult gae = compute_gae(batch, cfg.gamma, cfg.lambda);
  Rng rng(83);
  PpoDiagnostics diag = ppo_update(policy, batch, gae, cfg, rng);
  CHECK(prob0() > before);
  CHECK(diag.nan_incidents == 0);
  CHECK(diag.entropy > 0.0);
}

TEST_CASE("ppo_update: deterministic under identical rng and batch") {
  PpoConfig cfg;
  auto a1 = make_actors(2, 91);
  PolicyNet p1(a1[0].env->obs_dim(), 4, cfg, 92);
  PolicyNet p2(a1[0].env->obs_dim(), 4, cfg, 92);
  ObsNormalizer norm = ObsNormalizer::identity(a1[0].env->obs_dim());
  IntrinsicFn reward = [](const Transition& t, Rng&) {
    return 0.1 * t.action + 0.01 * t.sp[0];
  };
  RolloutBatch batch = collect_rollouts(a1, p1, norm, nullptr, reward, 32);
  RunningRewardStd stat(2, cfg.gamma);
  normalize_batch_rewards(batch, stat);
  GaeResult gae = compute_gae(batch, cfg.gamma, cfg.lambda);
  Rng r1(93), r2(93);
  ppo_update(p1, batch, gae, cfg, r1);
  ppo_update(p2, batch, gae, cfg, r2);
  for (int i = 0; i < p1.params().count(); ++i) {
    CHECK(p1.params().entries()[static_cast<std::size_t>(i)].value.a ==
          p2.params().entries()[static_cast<std::size_t>(i)].value.a);
  }
}
