#pragma once

#include <cstdio>
#include <optional>
#include <utility>
#include <vector>

#include "vdm/autodiff.hpp"
#include "vdm/gaussian.hpp"
#include "vdm/net.hpp"
#include "vdm/rng.hpp"

namespace vdm {

// One training record: raw states plus their model-space embeddings (xs/xsp
// are the frozen-feature embeddings in feature-space mode and aliases of the
// raw states in raw-space mode).
struct Transition {
  Vec s;
  int action = 0;
  Vec sp;
  Vec xs;
  Vec xsp;
  Vec a_onehot;
};

struct VdmConfig {
  int input_dim = 0;   // dim of x(s)
  int action_dim = 0;  // one-hot width
  int target_dim = 0;  // dim of predicted x(s')
  int latent_dim = 128;
  int hidden = 256;
  int fc_layers = 2;
  int res_blocks = 3;
  int gen_fc_layers = 3;
  int gen_res_blocks = 3;
  bool skip_connections = true;
  // CVAE mode: the latent prior is clamped to N(0, I); the conditioning body
  // is still evaluated so skip connections keep carrying (s, a) features.
  bool standard_prior = false;
  double std_floor = 1e-4;
  double lr = 1e-4;
};

// Conditional generative dynamics model with Gaussian latent variables:
// a posterior network q(z|s,a,s'), a prior network p(z|s,a) and a generative
// network p(s'|s,a,z) that consumes the prior body's hidden features through
// skip connections. Actions are concatenated to every dense layer of the
// posterior/prior bodies.
class VdmModel {
 public:
  template <class Ctx>
  struct Gauss {
    typename Ctx::V mean;
    typename Ctx::V std;
  };

  VdmModel(const VdmConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.input_dim <= 0 || cfg_.action_dim <= 0 || cfg_.target_dim <= 0) {
      throw ConfigError("VdmModel: dimensions must be positive");
    }
    if (cfg_.latent_dim <= 0 || cfg_.hidden <= 0) {
      throw ConfigError("VdmModel: latent/hidden dims must be positive");
    }
    build();
    Rng rng(seed);
    params_.init_glorot(rng);
  }

  const VdmConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  int nan_incidents() const { return nan_incidents_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  // --- inference path (no recording) ---

  DiagGaussian posterior(const Vec& xs, const Vec& a, const Vec& xsp) const {
    EvalCtx cx(params_);
    auto g = posterior_fwd(cx, xs, a, xsp);
    return DiagGaussian{std::move(g.mean), std::move(g.std)};
  }

  struct PriorEval {
    DiagGaussian dist;
    Vec hidden;
  };

  PriorEval prior_eval(const Vec& xs, const Vec& a) const {
    EvalCtx cx(params_);
    auto [g, h] = prior_fwd(cx, xs, a);
    if (cfg_.standard_prior) {
      return PriorEval{standard_normal(cfg_.latent_dim), std::move(h)};
    }
    return PriorEval{DiagGaussian{std::move(g.mean), std::move(g.std)}, std::move(h)};
  }

  DiagGaussian prior(const Vec& xs, const Vec& a) const { return prior_eval(xs, a).dist; }

  DiagGaussian generate(const Vec& xs, const Vec& a, const Vec& z) const {
    return generate_with_hidden(prior_eval(xs, a).hidden, z);
  }

  DiagGaussian generate_with_hidden(const Vec& prior_hidden, const Vec& z) const {
    EvalCtx cx(params_);
    Vec zc = z;
    Vec hc = prior_hidden;
    auto g = generative_fwd(cx, std::move(zc), cfg_.skip_connections ? &hc : nullptr);
    return DiagGaussian{std::move(g.mean), std::move(g.std)};
  }

  // Single-sample lower-bound estimate:
  //   log p(s'|s,a,z) - KL[q(z|s,a,s') || p(z|s,a)],  z = mean + std * noise.
  double elbo(const Transition& t, const Vec& noise) const {
    EvalCtx cx(params_);
    return elbo_fwd(cx, t, noise);
  }

  // One Adam ascent step on the batch-mean single-sample bound. Returns the
  // negated mean bound (the minimized loss). A non-finite loss skips the
  // update and logs the incident.
  //
  // kl_weight < 1 anneals the KL term during warm-up; without it the
  // posterior collapses onto the prior before the decoder learns to read z
  // (the usual variational failure mode). The returned loss and every
  // evaluation path always use the unweighted bound.
  double train_step(const std::vector<Transition>& batch, Rng& rng, double kl_weight = 1.0) {
    if (batch.empty()) throw UsageError("VdmModel::train_step: empty batch");
    std::vector<Vec> noises;
    noises.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      noises.push_back(rng.normal_vec(static_cast<std::size_t>(cfg_.latent_dim)));
    }
    Tape tape(params_);
    GradCtx cx(tape);
    std::vector<NodeId> recons, kls;
    recons.reserve(batch.size());
    kls.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto [recon, kl] = elbo_parts_fwd(cx, batch[i], noises[i]);
      recons.push_back(recon);
      kls.push_back(kl);
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    NodeId mean_recon = cx.s_sum(recons, inv);
    NodeId mean_kl = cx.s_sum(kls, inv);
    NodeId loss = cx.s_add(cx.s_mul_const(mean_recon, -1.0), cx.s_mul_const(mean_kl, kl_weight));
    double loss_val = tape.scalar(mean_kl) - tape.scalar(mean_recon);  // unweighted -elbo
    if (!std::isfinite(loss_val)) {
      ++nan_incidents_;
      std::fprintf(stderr, "[vdm] train_step: non-finite loss, step skipped\n");
      return loss_val;
    }
    grads_->zero();
    tape.backward(loss, *grads_);
    adam_step(params_, *grads_, cfg_.lr);
    return loss_val;
  }

  // --- recorded forwards, shared by training and gradient checks ---

  template <class Ctx>
  Gauss<Ctx> posterior_fwd(Ctx& cx, const Vec& xs, const Vec& a, const Vec& xsp) const {
    check_action(a);
    auto h = cx.activation(cx.affine(post_fc_[0].W, post_fc_[0].b, concat(xs, a, xsp)), Act::Relu);
    for (std::size_t i = 1; i < post_fc_.size(); ++i) {
      h = cx.activation(cx.affine(post_fc_[i].W, post_fc_[i].b, std::move(h), a), Act::Relu);
    }
    for (const auto& block : post_res_) h = block.forward(cx, std::move(h), &a);
    auto [m, s] = post_head_.forward(cx, std::move(h));
    return {std::move(m), std::move(s)};
  }

  template <class Ctx>
  std::pair<Gauss<Ctx>, typename Ctx::V> prior_fwd(Ctx& cx, const Vec& xs, const Vec& a) const {
    check_action(a);
    auto h = cx.activation(cx.affine(prior_fc_[0].W, prior_fc_[0].b, concat(xs, a)), Act::Relu);
    for (std::size_t i = 1; i < prior_fc_.size(); ++i) {
      h = cx.activation(cx.affine(prior_fc_[i].W, prior_fc_[i].b, std::move(h), a), Act::Relu);
    }
    for (const auto& block : prior_res_) h = block.forward(cx, std::move(h), &a);
    auto [m, s] = prior_head_.forward(cx, h);
    return {Gauss<Ctx>{std::move(m), std::move(s)}, std::move(h)};
  }

  template <class Ctx>
  Gauss<Ctx> generative_fwd(Ctx& cx, typename Ctx::V z, const typename Ctx::V* prior_hidden) const {
    bool skip = prior_hidden != nullptr;
    typename Ctx::V h =
        skip ? cx.affine2(gen_fc_[0].W, gen_fc_[0].b, std::move(z), *prior_hidden)
             : cx.affine(gen_fc_[0].W, gen_fc_[0].b, std::move(z));
    h = cx.activation(std::move(h), Act::Relu);
    for (std::size_t i = 1; i < gen_fc_.size(); ++i) {
      h = skip ? cx.affine2(gen_fc_[i].W, gen_fc_[i].b, std::move(h), *prior_hidden)
               : cx.affine(gen_fc_[i].W, gen_fc_[i].b, std::move(h));
      h = cx.activation(std::move(h), Act::Relu);
    }
    for (const auto& block : gen_res_) h = block.forward(cx, std::move(h));
    auto [m, s] = gen_head_.forward(cx, std::move(h));
    return {std::move(m), std::move(s)};
  }

  template <class Ctx>
  std::pair<typename Ctx::S, typename Ctx::S> elbo_parts_fwd(Ctx& cx, const Transition& t,
                                                             const Vec& noise) const {
    auto q = posterior_fwd(cx, t.xs, t.a_onehot, t.xsp);
    typename Ctx::S kl;
    typename Ctx::V prior_hidden;
    bool need_prior_body = cfg_.skip_connections || !cfg_.standard_prior;
    if (need_prior_body) {
      auto [p, h] = prior_fwd(cx, t.xs, t.a_onehot);
      prior_hidden = std::move(h);
      if (cfg_.standard_prior) {
        kl = cx.kl_const_p(q.mean, q.std, Vec(cfg_.latent_dim, 0.0), Vec(cfg_.latent_dim, 1.0));
      } else {
        kl = cx.kl(q.mean, q.std, p.mean, p.std);
      }
    } else {
      kl = cx.kl_const_p(q.mean, q.std, Vec(cfg_.latent_dim, 0.0), Vec(cfg_.latent_dim, 1.0));
    }
    auto z = cx.reparam(q.mean, q.std, noise);
    auto g = generative_fwd(cx, std::move(z), cfg_.skip_connections ? &prior_hidden : nullptr);
    auto recon = cx.glp(t.xsp, g.mean, g.std);
    return {std::move(recon), std::move(kl)};
  }

  template <class Ctx>
  typename Ctx::S elbo_fwd(Ctx& cx, const Transition& t, const Vec& noise) const {
    auto [recon, kl] = elbo_parts_fwd(cx, t, noise);
    return cx.s_sub(recon, kl);
  }

  static DiagGaussian standard_normal(int dim) {
    return DiagGaussian{Vec(static_cast<std::size_t>(dim), 0.0),
                        Vec(static_cast<std::size_t>(dim), 1.0)};
  }

 private:
  void check_action(const Vec& a) const {
    if (static_cast<int>(a.size()) != cfg_.action_dim) {
      throw ConfigError("VdmModel: action encoding width mismatch");
    }
  }

  void build() {
    int in = cfg_.input_dim, ad = cfg_.action_dim, h = cfg_.hidden;
    // posterior
    post_fc_.push_back(add_dense(params_, "post.fc0", in + ad + cfg_.target_dim, h));
    for (int i = 1; i < cfg_.fc_layers; ++i) {
      post_fc_.push_back(add_dense(params_, "post.fc" + std::to_string(i), h + ad, h));
    }
    for (int i = 0; i < cfg_.res_blocks; ++i) {
      post_res_.emplace_back(params_, "post.res" + std::to_string(i), h, ad);
    }
    post_head_ = GaussianHead(params_, "post.head", h, cfg_.latent_dim, cfg_.std_floor);
    // prior
    prior_fc_.push_back(add_dense(params_, "prior.fc0", in + ad, h));
    for (int i = 1; i < cfg_.fc_layers; ++i) {
      prior_fc_.push_back(add_dense(params_, "prior.fc" + std::to_string(i), h + ad, h));
    }
    for (int i = 0; i < cfg_.res_blocks; ++i) {
      prior_res_.emplace_back(params_, "prior.res" + std::to_string(i), h, ad);
    }
    prior_head_ = GaussianHead(params_, "prior.head", h, cfg_.latent_dim, cfg_.std_floor);
    // generative
    int skip_dim = cfg_.skip_connections ? h : 0;
    gen_fc_.push_back(add_dense(params_, "gen.fc0", cfg_.latent_dim + skip_dim, h));
    for (int i = 1; i < cfg_.gen_fc_layers; ++i) {
      gen_fc_.push_back(add_dense(params_, "gen.fc" + std::to_string(i), h + skip_dim, h));
    }
    for (int i = 0; i < cfg_.gen_res_blocks; ++i) {
      gen_res_.emplace_back(params_, "gen.res" + std::to_string(i), h, 0);
    }
    gen_head_ = GaussianHead(params_, "gen.head", h, cfg_.target_dim, cfg_.std_floor);

    grads_.emplace(params_);
  }

  VdmConfig cfg_;
  ParamSet params_;
  std::vector<DenseIds> post_fc_, prior_fc_, gen_fc_;
  std::vector<ResidualBlock> post_res_, prior_res_, gen_res_;
  GaussianHead post_head_, prior_head_, gen_head_;
  std::optional<Grads> grads_;
  int nan_incidents_ = 0;
};

inline Vec vdm_make_noise(Rng& rng, int latent_dim) {
  return rng.normal_vec(static_cast<std::size_t>(latent_dim));
}

}  // namespace vdm
