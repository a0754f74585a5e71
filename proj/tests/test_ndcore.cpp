#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdm/autodiff.hpp"
#include "vdm/gaussian.hpp"
#include "vdm/gradcheck.hpp"
#include "vdm/net.hpp"
#include "vdm/rng.hpp"
#include "vdm/tensor.hpp"

using namespace vdm;

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;

// Monte-Carlo estimate of KL[q||p] = E_q[log q - log p]; the independent
// oracle for the closed form.
double mc_kl(const DiagGaussian& q, const DiagGaussian& p, int samples, Rng& rng) {
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vec x(q.mean.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = rng.normal(q.mean[j], q.std[j]);
    acc += gaussian_log_prob(x, q) - gaussian_log_prob(x, p);
  }
  return acc / samples;
}

}  // namespace

TEST_CASE("mlp_forward: identity network passes input through") {
  ParamSet ps;
  Mlp net(ps, "id", {2, 2}, {Act::Identity});
  ps.value(net.layers()[0].ids.W)(0, 0) = 1.0;
  ps.value(net.layers()[0].ids.W)(1, 1) = 1.0;
  EvalCtx cx(ps);
  Vec out = net.forward(cx, {1.0, 2.0});
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("mlp_forward: single relu layer, hand-computed affine") {
  ParamSet ps;
  Mlp net(ps, "m", {1, 1}, {Act::Relu});
  ps.value(net.layers()[0].ids.W)(0, 0) = 2.0;
  ps.value(net.layers()[0].ids.b)(0, 0) = 1.0;
  EvalCtx cx(ps);
  CHECK(net.forward(cx, {3.0})[0] == doctest::Approx(7.0));
  CHECK(net.forward(cx, {-3.0})[0] == doctest::Approx(0.0));
}

TEST_CASE("mlp_forward: shape mismatch reports configuration error") {
  ParamSet ps;
  Mlp net(ps, "m", {3, 2}, {Act::Tanh});
  EvalCtx cx(ps);
  CHECK_THROWS_AS((void)net.forward(cx, {1.0, 2.0}), ConfigError);
}

TEST_CASE("residual_block: identity when inner path is zero") {
  ParamSet ps;
  ResidualBlock block(ps, "rb", 2);
  EvalCtx cx(ps);
  Vec out = block.forward(cx, Vec{0.5, -0.5});
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("residual_block: additive skip with constant inner output") {
  ParamSet ps;
  ResidualBlock block(ps, "rb", 2);
  ps.value(block.inner2().b)(0, 0) = 1.0;
  ps.value(block.inner2().b)(1, 0) = 1.0;
  EvalCtx cx(ps);
  Vec out = block.forward(cx, Vec{0.0, 0.0});
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("residual_block: matches explicit re-computation on a random block") {
  ParamSet ps;
  ResidualBlock block(ps, "rb", 3);
  Rng rng(7);
  ps.init_glorot(rng);
  Vec in = {0.3, -1.2, 0.8};
  EvalCtx cx(ps);
  Vec out = block.forward(cx, in);

  // independent re-evaluation with explicit loops
  const Mat& W1 = ps.value(block.inner1().W);
  const Mat& b1 = ps.value(block.inner1().b);
  const Mat& W2 = ps.value(block.inner2().W);
  const Mat& b2 = ps.value(block.inner2().b);
  Vec h1(3), h2(3);
  for (int r = 0; r < 3; ++r) {
    double acc = b1(r, 0);
    for (int c = 0; c < 3; ++c) acc += W1(r, c) * in[static_cast<std::size_t>(c)];
    h1[static_cast<std::size_t>(r)] = acc > 0 ? acc : 0.0;
  }
  for (int r = 0; r < 3; ++r) {
    double acc = b2(r, 0);
    for (int c = 0; c < 3; ++c) acc += W2(r, c) * h1[static_cast<std::size_t>(c)];
    h2[static_cast<std::size_t>(r)] = in[static_cast<std::size_t>(r)] + acc;
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(out[static_cast<std::size_t>(i)] - h2[static_cast<std::size_t>(i)]) < 1e-12);
  }
}

TEST_CASE("gaussian_log_prob: spot values") {
  DiagGaussian g{{0.0}, {1.0}};
  CHECK(gaussian_log_prob({0.0}, g) == doctest::Approx(-kHalfLogTwoPi).epsilon(1e-12));
  CHECK(gaussian_log_prob({1.0}, g) == doctest::Approx(-kHalfLogTwoPi - 0.5).epsilon(1e-12));

  int c = 5;
  DiagGaussian g5{Vec(c, 0.7), Vec(c, 1.0)};
  CHECK(gaussian_log_prob(Vec(c, 0.7), g5) == doctest::Approx(-c * kHalfLogTwoPi).epsilon(1e-12));
}

TEST_CASE("gaussian_log_prob: non-positive std is a domain error") {
  DiagGaussian g{{0.0}, {0.0}};
  CHECK_THROWS_AS(gaussian_log_prob({0.0}, g), DomainError);
}

TEST_CASE("gaussian_kl: closed-form spot values") {
  DiagGaussian std_normal{{0.0}, {1.0}};
  CHECK(gaussian_kl(std_normal, std_normal) == doctest::Approx(0.0).epsilon(1e-15));

  DiagGaussian q1{{1.0}, {1.0}};
  CHECK(gaussian_kl(q1, std_normal) == doctest::Approx(0.5).epsilon(1e-12));

  DiagGaussian q2{{0.0}, {2.0}};
  double expected = 0.5 * (4.0 - 1.0 + std::log(1.0 / 4.0));
  CHECK(expected == doctest::Approx(0.8068528194400547));
  CHECK(gaussian_kl(q2, std_normal) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gaussian_kl: matches Monte-Carlo estimate on random 8-d pairs") {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    DiagGaussian q, p;
    for (int j = 0; j < 8; ++j) {
      q.mean.push_back(rng.uniform(-2.0, 2.0));
      q.std.push_back(rng.uniform(0.3, 3.0));
      p.mean.push_back(rng.uniform(-2.0, 2.0));
      p.std.push_back(rng.uniform(0.3, 3.0));
    }
    double analytic = gaussian_kl(q, p);
    double mc = mc_kl(q, p, 200000, rng);
    CHECK(std::abs(analytic - mc) / std::abs(analytic) < 0.02);
  }
}

TEST_CASE("gaussian_kl: non-negative and zero iff equal (property)") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    DiagGaussian q, p;
    int c = 1 + rng.uniform_int(6);
    for (int j = 0; j < c; ++j) {
      q.mean.push_back(rng.normal());
      q.std.push_back(0.2 + rng.uniform() * 2.5);
      p.mean.push_back(rng.normal());
      p.std.push_back(0.2 + rng.uniform() * 2.5);
    }
    CHECK(gaussian_kl(q, p) >= -1e-9);
    CHECK(std::abs(gaussian_kl(q, q)) <= 1e-9);
  }
}

TEST_CASE("reparam_sample: deterministic transform of the noise") {
  DiagGaussian g{{2.0}, {3.0}};
  CHECK(reparam_sample(g, {0.0})[0] == doctest::Approx(2.0));
  CHECK(reparam_sample(g, {-1.0})[0] == doctest::Approx(-1.0));
  DiagGaussian unit{{0.0}, {1.0}};
  CHECK(reparam_sample(unit, {1.5})[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(reparam_sample(unit, {1.0, 2.0}), DomainError);
}

TEST_CASE("reparam_sample: empirical moments match the Gaussian (property)") {
  DiagGaussian g{{1.3, -0.4}, {0.8, 2.1}};
  Rng rng(17);
  const int n = 100000;
  Vec sum(2, 0.0), sumsq(2, 0.0);
  for (int i = 0; i < n; ++i) {
    Vec z = reparam_sample(g, rng.normal_vec(2));
    for (int j = 0; j < 2; ++j) {
      sum[j] += z[j];
      sumsq[j] += z[j] * z[j];
    }
  }
  for (int j = 0; j < 2; ++j) {
    double mean = sum[j] / n;
    double var = sumsq[j] / n - mean * mean;
    double se_mean = g.std[j] / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - g.mean[j]) < 3.0 * se_mean);
    double se_std = g.std[j] / std::sqrt(2.0 * n);
    CHECK(std::abs(std::sqrt(var) - g.std[j]) < 3.0 * se_std);
  }
}

TEST_CASE("backward: linear loss w*x has gradient x") {
  ParamSet ps;
  ParamId w = ps.add("w", 1, 1);
  ParamId b = ps.add("zero_bias", 1, 1);
  ps.value(w)(0, 0) = 0.37;
  Grads grads(ps);
  grads.zero();
  Tape tape(ps);
  NodeId wn = tape.affine(w, b, Vec{3.0});
  tape.backward(wn, grads);
  CHECK(grads[w](0, 0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("backward: d KL(N(mu,1) || N(0,1)) / d mu = mu") {
  ParamSet ps;
  ParamId mu = ps.add("mu", 1, 1);
  ParamId zb = ps.add("zb", 1, 1);
  ps.value(mu)(0, 0) = 1.0;
  Grads grads(ps);
  grads.zero();
  Tape tape(ps);
  GradCtx cx(tape);
  NodeId mean = cx.affine(mu, zb, Vec{1.0});  // mean node = mu * 1
  NodeId stdv = cx.add_scalar(cx.s_mul_const(cx.s_const(0.0), 0.0), 1.0);
  NodeId loss = cx.kl_const_p(mean, stdv, Vec{0.0}, Vec{1.0});
  tape.backward(loss, grads);
  CHECK(grads[mu](0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("backward: double call on a consumed tape is a usage error") {
  ParamSet ps;
  ParamId w = ps.add("w", 1, 1);
  ParamId b = ps.add("b", 1, 1);
  Grads grads(ps);
  grads.zero();
  Tape tape(ps);
  NodeId out = tape.affine(w, b, Vec{1.0});
  tape.backward(out, grads);
  CHECK_THROWS_AS(tape.backward(out, grads), UsageError);
}

TEST_CASE("grad_check: linear function is exact to 1e-10") {
  ParamSet ps;
  ParamId w = ps.add("w", 4, 1);
  ParamId b = ps.add("b", 1, 1);  // unused zero bias for the affine op
  Rng rng(3);
  for (double& x : ps.value(w).a) x = rng.normal();
  Mat wm = ps.value(w);

  // loss = sum_i w_i * x_i realized as a 1x4 affine
  ParamSet ps2;
  ParamId W = ps2.add("W", 1, 4);
  ParamId B = ps2.add("B", 1, 1);
  for (int i = 0; i < 4; ++i) ps2.value(W)(0, i) = wm(i, 0);
  Vec input = {0.5, -1.5, 2.0, 0.25};
  auto fn = [&](auto& cx) { return cx.pick(cx.affine(W, B, input), 0); };
  auto rep = grad_check(fn, ps2, 1e-5);
  CHECK(rep.max_rel_err < 1e-10);
}

TEST_CASE("grad_check: two-layer tanh mlp with gaussian_log_prob loss") {
  ParamSet ps;
  Mlp net(ps, "m", {3, 8, 4}, {Act::Tanh, Act::Identity});
  GaussianHead head(ps, "h", 4, 2, 1e-4);
  Rng rng(23);
  ps.init_glorot(rng);
  Vec input = rng.normal_vec(3);
  Vec target = rng.normal_vec(2);
  auto fn = [&](auto& cx) {
    auto h = net.forward(cx, input);
    auto [m, s] = head.forward(cx, std::move(h));
    return cx.glp(target, m, s);
  };
  auto rep = grad_check(fn, ps, 1e-5);
  INFO("worst: ", rep.worst_param, " analytic=", rep.analytic, " numeric=", rep.numeric);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("grad_check: residual block + reparam + kl composite") {
  ParamSet ps;
  ResidualBlock block(ps, "rb", 4, 2);
  GaussianHead q(ps, "q", 4, 3, 1e-4);
  GaussianHead p(ps, "p", 4, 3, 1e-4);
  DenseIds in = add_dense(ps, "in", 3, 4);
  GaussianHead out(ps, "out", 3, 3, 1e-4);
  Rng rng(29);
  ps.init_glorot(rng);
  Vec x = rng.normal_vec(3);
  Vec side = {1.0, 0.0};
  Vec noise = rng.normal_vec(3);
  Vec target = rng.normal_vec(3);
  auto fn = [&](auto& cx) {
    auto h = cx.activation(cx.affine(in.W, in.b, x), Act::Relu);
    h = block.forward(cx, std::move(h), &side);
    auto [qm, qs] = q.forward(cx, h);
    auto [pm, psv] = p.forward(cx, h);
    auto z = cx.reparam(qm, qs, noise);
    auto [gm, gs] = out.forward(cx, std::move(z));
    auto recon = cx.glp(target, gm, gs);
    auto kl = cx.kl(qm, qs, pm, psv);
    return cx.s_sub(recon, kl);
  };
  auto rep = grad_check(fn, ps, 1e-5);
  INFO("worst: ", rep.worst_param);
  CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("adam_step: zero gradients leave parameters unchanged") {
  ParamSet ps;
  ParamId w = ps.add("w", 2, 2);
  Rng rng(5);
  ps.init_glorot(rng);
  Mat before = ps.value(w);
  Grads grads(ps);
  grads.zero();
  adam_step(ps, grads, 0.05);
  CHECK(ps.step() == 1);
  for (std::size_t i = 0; i < before.a.size(); ++i) {
    CHECK(ps.value(w).a[i] == before.a[i]);
  }
}

TEST_CASE("adam_step: first step moves by lr * sign(gradient)") {
  ParamSet ps;
  ParamId w = ps.add("w", 1, 1);
  ps.value(w)(0, 0) = 2.0;
  Grads grads(ps);
  grads.zero();
  grads[w](0, 0) = 0.73;
  adam_step(ps, grads, 0.01);
  CHECK(ps.value(w)(0, 0) == doctest::Approx(2.0 - 0.01).epsilon(1e-6));

  ps.value(w)(0, 0) = 2.0;
  ParamSet ps2;
  ParamId w2 = ps2.add("w", 1, 1);
  ps2.value(w2)(0, 0) = 2.0;
  Grads g2(ps2);
  g2.zero();
  g2[w2](0, 0) = -5.1;
  adam_step(ps2, g2, 0.01);
  CHECK(ps2.value(w2)(0, 0) == doctest::Approx(2.0 + 0.01).epsilon(1e-6));
}

TEST_CASE("adam_step: converges on a convex scalar objective") {
  ParamSet ps;
  ParamId w = ps.add("w", 1, 1);
  Grads grads(ps);
  for (int it = 0; it < 1000; ++it) {
    grads.zero();
    grads[w](0, 0) = 2.0 * (ps.value(w)(0, 0) - 3.0);
    adam_step(ps, grads, 0.05);
  }
  CHECK(std::abs(ps.value(w)(0, 0) - 3.0) < 0.05);
}

TEST_CASE("adam_step: NaN gradient aborts with the parameter name") {
  ParamSet ps;
  ParamId w = ps.add("trunk.W", 1, 1);
  Grads grads(ps);
  grads.zero();
  grads[w](0, 0) = std::nan("");
  Mat before = ps.value(w);
  try {
    adam_step(ps, grads, 0.01);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("trunk.W") != std::string::npos);
  }
  CHECK(ps.value(w).a == before.a);
  CHECK(ps.step() == 0);
}

TEST_CASE("forward passes are deterministic and eval/grad paths agree bitwise") {
  ParamSet ps;
  Mlp net(ps, "m", {4, 16, 8}, {Act::Relu, Act::Tanh});
  GaussianHead head(ps, "h", 8, 3, 1e-4);
  Rng rng(41);
  ps.init_glorot(rng);
  Vec input = rng.normal_vec(4);

  EvalCtx e1(ps);
  auto [m1, s1] = head.forward(e1, net.forward(e1, input));
  EvalCtx e2(ps);
  auto [m2, s2] = head.forward(e2, net.forward(e2, input));
  CHECK(m1 == m2);
  CHECK(s1 == s2);

  Tape tape(ps);
  GradCtx gc(tape);
  auto [mn, sn] = head.forward(gc, net.forward(gc, input));
  CHECK(tape.value(mn) == m1);
  CHECK(tape.value(sn) == s1);
}
