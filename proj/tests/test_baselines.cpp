#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdm/baselines.hpp"
#include "vdm/data.hpp"
#include "vdm/ensemble_demo.hpp"
#include "vdm/gradcheck.hpp"

using namespace vdm;

namespace {

ForwardModelConfig small_fwd() {
  ForwardModelConfig cfg;
  cfg.input_dim = 4;
  cfg.action_dim = 2;
  cfg.target_dim = 4;
  cfg.hidden = 8;
  cfg.layers = 2;
  return cfg;
}

Transition random_transition(Rng& rng, int in, int actions, int target) {
  Transition t;
  t.xs = rng.normal_vec(static_cast<std::size_t>(in));
  t.xsp = rng.normal_vec(static_cast<std::size_t>(target));
  t.action = rng.uniform_int(actions);
  t.a_onehot = one_hot(t.action, actions);
  return t;
}

}  // namespace

TEST_CASE("pred_error_reward: zero for an exact prediction, MSE otherwise") {
  ForwardModelConfig cfg = small_fwd();
  ForwardModel model(cfg, 3);
  Rng rng(4);
  Transition t = random_transition(rng, 4, 2, 4);
  t.xsp = model.predict(t.xs, t.a_onehot);
  CHECK(pred_error_reward(model, t) == doctest::Approx(0.0).epsilon(1e-15));

  for (double& x : t.xsp) x += 1.0;  // constant offset of 1 in every dimension
  CHECK(pred_error_reward(model, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward model: training drives the prediction error down") {
  ForwardModelConfig cfg = small_fwd();
  cfg.lr = 1e-3;
  cfg.hidden = 16;
  ForwardModel model(cfg, 5);
  Rng rng(6);
  // deterministic linear dynamics target
  std::vector<Transition> data;
  for (int i = 0; i < 256; ++i) {
    Transition t = random_transition(rng, 4, 2, 4);
    for (int j = 0; j < 4; ++j) t.xsp[static_cast<std::size_t>(j)] = 0.5 * t.xs[static_cast<std::size_t>(j)] + 0.2 * t.action;
    data.push_back(std::move(t));
  }
  double first = model.train_step(data);
  double last = first;
  for (int it = 0; it < 1000; ++it) last = model.train_step(data);
  CHECK(last < 0.2 * first);
}

TEST_CASE("forward model gradient check (point and probabilistic heads)") {
  for (bool prob : {false, true}) {
    ForwardModelConfig cfg = small_fwd();
    cfg.probabilistic = prob;
    ForwardModel model(cfg, 7);
    Rng rng(8);
    Transition t = random_transition(rng, 4, 2, 4);
    auto fn = [&](auto& cx) { return model.loss_fwd(cx, t); };
    auto rep = grad_check(fn, model.params(), 1e-5);
    CHECK(rep.max_rel_err < (prob ? 1e-3 : 1e-4));
  }
}

TEST_CASE("disagreement_reward: identical members agree exactly") {
  EnsembleConfig cfg;
  cfg.member = small_fwd();
  cfg.size = 3;
  EnsembleModel ensemble(cfg, 9);
  // overwrite members 1..2 with member 0's parameters
  for (int m = 1; m < 3; ++m) {
    for (int i = 0; i < ensemble.member(0).params().count(); ++i) {
      ensemble.member(m).params().entries()[static_cast<std::size_t>(i)].value =
          ensemble.member(0).params().entries()[static_cast<std::size_t>(i)].value;
    }
  }
  Rng rng(10);
  Transition t = random_transition(rng, 4, 2, 4);
  CHECK(disagreement_reward(ensemble, t) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("disagreement_reward: two members predicting 0 and 2 give variance 1") {
  ForwardModelConfig mcfg;
  mcfg.input_dim = 1;
  mcfg.action_dim = 2;
  mcfg.target_dim = 1;
  mcfg.hidden = 4;
  mcfg.layers = 1;
  EnsembleConfig cfg;
  cfg.member = mcfg;
  cfg.size = 2;
  EnsembleModel ensemble(cfg, 11);
  for (int m = 0; m < 2; ++m) {
    ParamSet& ps = ensemble.member(m).params();
    ps.zero_param(ps.find("fwd.l0.W"));
    ps.zero_param(ps.find("fwd.l0.b"));
    ps.zero_param(ps.find("fwd.out.W"));
    ParamId ob = ps.find("fwd.out.b");
    ps.value(ob)(0, 0) = m == 0 ? 0.0 : 2.0;
  }
  Rng rng(12);
  Transition t = random_transition(rng, 1, 2, 1);
  CHECK(disagreement_reward(ensemble, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disagreement_reward: fewer than two members is a configuration error") {
  EnsembleConfig cfg;
  cfg.member = small_fwd();
  cfg.size = 1;
  EnsembleModel ensemble(cfg, 13);
  Rng rng(14);
  Transition t = random_transition(rng, 4, 2, 4);
  CHECK_THROWS_AS(disagreement_reward(ensemble, t), ConfigError);
}

TEST_CASE("cvae: encoder clamped to N(0, I) zeroes the KL term") {
  VdmConfig cfg;
  cfg.input_dim = 4;
  cfg.action_dim = 2;
  cfg.target_dim = 4;
  cfg.latent_dim = 3;
  cfg.hidden = 8;
  cfg.res_blocks = 1;
  cfg.gen_fc_layers = 2;
  cfg.gen_res_blocks = 1;
  VdmModel model(cvae_config(cfg), 15);
  ParamSet& ps = model.params();
  ps.zero_param(ps.find("post.head.mean.W"));
  ps.zero_param(ps.find("post.head.mean.b"));
  ps.zero_param(ps.find("post.head.std.W"));
  ParamId bs = ps.find("post.head.std.b");
  // softplus(b) + floor = 1
  double target = 1.0 - model.config().std_floor;
  double b = std::log(std::exp(target) - 1.0);
  for (int j = 0; j < cfg.latent_dim; ++j) ps.value(bs)(j, 0) = b;

  Rng rng(16);
  Transition t = random_transition(rng, 4, 2, 4);
  DiagGaussian q = model.posterior(t.xs, t.a_onehot, t.xsp);
  DiagGaussian std_normal = VdmModel::standard_normal(cfg.latent_dim);
  CHECK(gaussian_kl(q, std_normal) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cvae: KL equals the VDM KL when the prior net is clamped to N(0, I)") {
  VdmConfig cfg;
  cfg.input_dim = 4;
  cfg.action_dim = 2;
  cfg.target_dim = 4;
  cfg.latent_dim = 3;
  cfg.hidden = 8;
  cfg.res_blocks = 1;
  VdmModel vdm_model(cfg, 17);
  // clamp the VDM prior head to emit N(0, I)
  ParamSet& ps = vdm_model.params();
  ps.zero_param(ps.find("prior.head.mean.W"));
  ps.zero_param(ps.find("prior.head.mean.b"));
  ps.zero_param(ps.find("prior.head.std.W"));
  ParamId bs = ps.find("prior.head.std.b");
  double target = 1.0 - cfg.std_floor;
  double b = std::log(std::exp(target) - 1.0);
  for (int j = 0; j < cfg.latent_dim; ++j) ps.value(bs)(j, 0) = b;

  Rng rng(18);
  Transition t = random_transition(rng, 4, 2, 4);
  DiagGaussian q = vdm_model.posterior(t.xs, t.a_onehot, t.xsp);
  DiagGaussian p = vdm_model.prior(t.xs, t.a_onehot);
  double kl_clamped = gaussian_kl(q, p);
  double kl_standard = gaussian_kl(q, VdmModel::standard_normal(cfg.latent_dim));
  CHECK(kl_clamped == doctest::Approx(kl_standard).epsilon(1e-9));
  CHECK(kl_standard >= 0.0);
}

TEST_CASE("untrained probabilistic ensemble fails the class-0 control") {
  EnsembleDemoConfig cfg;
  cfg.train = false;
  cfg.eval_states = 200;
  EnsembleDemoReport report = ensemble_demo_noisydigits(cfg, 19);
  REQUIRE(report.members.size() == 3);
  // random-init predictions do not decode class-0 inputs to class 1 reliably
  for (const auto& m : report.members) CHECK(m.class0_to_1_freq < 0.95);
}

TEST_CASE("baseline rewards are pure functions of (model, transition)") {
  ForwardModelConfig cfg = small_fwd();
  ForwardModel model(cfg, 21);
  EnsembleConfig ecfg;
  ecfg.member = cfg;
  ecfg.size = 3;
  EnsembleModel ensemble(ecfg, 22);
  Rng rng(23);
  Transition t = random_transition(rng, 4, 2, 4);
  CHECK(pred_error_reward(model, t) == pred_error_reward(model, t));
  CHECK(disagreement_reward(ensemble, t) == disagreement_reward(ensemble, t));
}
