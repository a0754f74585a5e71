#pragma once

#include <cstdio>
#include <optional>
#include <vector>

#include "vdm/dynamics.hpp"
#include "vdm/net.hpp"

namespace vdm {

struct ForwardModelConfig {
  int input_dim = 0;
  int action_dim = 0;
  int target_dim = 0;
  int hidden = 64;
  int layers = 2;
  bool probabilistic = false;  // Gaussian head instead of a point prediction
  double std_floor = 1e-4;
  double lr = 1e-4;
};

// One-step forward dynamics model (x(s), a) -> x(s'); the prediction-error
// baseline trains it on the running data stream and uses its squared error
// as the intrinsic reward.
class ForwardModel {
 public:
  ForwardModel(const ForwardModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    std::vector<int> widths{cfg.input_dim + cfg.action_dim};
    std::vector<Act> acts;
    for (int i = 0; i < cfg.layers; ++i) {
      widths.push_back(cfg.hidden);
      acts.push_back(Act::Relu);
    }
    body_ = Mlp(params_, "fwd", widths, acts);
    if (cfg.probabilistic) {
      head_ = GaussianHead(params_, "fwd.out", cfg.hidden, cfg.target_dim, cfg.std_floor);
    } else {
      out_ = add_dense(params_, "fwd.out", cfg.hidden, cfg.target_dim);
    }
    Rng rng(seed);
    params_.init_glorot(rng);
    grads_.emplace(params_);
  }

  const ForwardModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  Vec predict(const Vec& xs, const Vec& a) const {
    EvalCtx cx(params_);
    if (cfg_.probabilistic) return predict_dist(xs, a).mean;
    return cx.affine(out_.W, out_.b, body_.forward(cx, concat(xs, a)));
  }

  DiagGaussian predict_dist(const Vec& xs, const Vec& a) const {
    if (!cfg_.probabilistic) {
      throw UsageError("ForwardModel::predict_dist: model has a point head");
    }
    EvalCtx cx(params_);
    auto [m, s] = head_.forward(cx, body_.forward(cx, concat(xs, a)));
    return DiagGaussian{std::move(m), std::move(s)};
  }

  template <class Ctx>
  typename Ctx::S loss_fwd(Ctx& cx, const Transition& t) const {
    auto h = body_.forward(cx, concat(t.xs, t.a_onehot));
    if (cfg_.probabilistic) {
      auto [m, s] = head_.forward(cx, std::move(h));
      return cx.s_mul_const(cx.glp(t.xsp, m, s), -1.0);
    }
    auto pred = cx.affine(out_.W, out_.b, std::move(h));
    return cx.s_mul_const(cx.sse(t.xsp, pred),
                          1.0 / static_cast<double>(cfg_.target_dim));
  }

  // One Adam step on the mean per-transition loss (MSE or Gaussian NLL).
  double train_step(const std::vector<Transition>& batch) {
    if (batch.empty()) throw UsageError("ForwardModel::train_step: empty batch");
    Tape tape(params_);
    GradCtx cx(tape);
    std::vector<NodeId> losses;
    losses.reserve(batch.size());
    for (const Transition& t : batch) losses.push_back(loss_fwd(cx, t));
    NodeId loss = cx.s_sum(losses, 1.0 / static_cast<double>(batch.size()));
    double loss_val = tape.scalar(loss);
    if (!std::isfinite(loss_val)) {
      std::fprintf(stderr, "[baseline] forward-model train_step: non-finite loss, skipped\n");
      return loss_val;
    }
    grads_->zero();
    tape.backward(loss, *grads_);
    adam_step(params_, *grads_, cfg_.lr);
    return loss_val;
  }

 private:
  ForwardModelConfig cfg_;
  ParamSet params_;
  Mlp body_;
  DenseIds out_;
  GaussianHead head_;
  std::optional<Grads> grads_;
};

// Mean squared prediction error over dimensions.
inline double pred_error_reward(const ForwardModel& model, const Transition& t) {
  Vec pred = model.predict(t.xs, t.a_onehot);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += (pred[i] - t.xsp[i]) * (pred[i] - t.xsp[i]);
  }
  return acc / static_cast<double>(pred.size());
}

struct EnsembleConfig {
  ForwardModelConfig member;
  int size = 5;
  bool bootstrap = false;  // resample each member's minibatch
};

// E independently initialized forward models trained on the same stream.
class EnsembleModel {
 public:
  EnsembleModel(const EnsembleConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.size < 1) throw ConfigError("EnsembleModel: size must be >= 1");
    for (int e = 0; e < cfg.size; ++e) {
      members_.emplace_back(cfg.member, Rng::child(seed, static_cast<std::uint64_t>(e)).next_u64());
    }
  }

  int size() const { return static_cast<int>(members_.size()); }
  ForwardModel& member(int i) { return members_[static_cast<std::size_t>(i)]; }
  const ForwardModel& member(int i) const { return members_[static_cast<std::size_t>(i)]; }

  // Members consume identical minibatches unless bootstrap resampling is on.
  double train_step(const std::vector<Transition>& batch, Rng& rng) {
    double total = 0.0;
    for (auto& m : members_) {
      if (cfg_.bootstrap) {
        std::vector<Transition> resampled;
        resampled.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
          resampled.push_back(batch[static_cast<std::size_t>(
              rng.uniform_int(static_cast<int>(batch.size())))]);
        }
        total += m.train_step(resampled);
      } else {
        total += m.train_step(batch);
      }
    }
    return total / static_cast<double>(members_.size());
  }

 private:
  EnsembleConfig cfg_;
  std::vector<ForwardModel> members_;
};

// Per-dimension population variance of the member predictions, averaged over
// dimensions.
inline double disagreement_reward(const EnsembleModel& ensemble, const Transition& t) {
  if (ensemble.size() < 2) {
    throw ConfigError("disagreement_reward: needs an ensemble of at least 2 members");
  }
  int e = ensemble.size();
  std::vector<Vec> preds;
  preds.reserve(static_cast<std::size_t>(e));
  for (int i = 0; i < e; ++i) preds.push_back(ensemble.member(i).predict(t.xs, t.a_onehot));
  std::size_t d = preds[0].size();
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int i = 0; i < e; ++i) mean += preds[static_cast<std::size_t>(i)][j];
    mean /= e;
    double var = 0.0;
    for (int i = 0; i < e; ++i) {
      double dev = preds[static_cast<std::size_t>(i)][j] - mean;
      var += dev * dev;
    }
    acc += var / e;
  }
  return acc / static_cast<double>(d);
}

// CVAE dynamics = the same three-network architecture with the latent prior
// clamped to N(0, I).
inline VdmConfig cvae_config(VdmConfig cfg) {
  cfg.standard_prior = true;
  return cfg;
}

inline double cvae_elbo(const VdmModel& model, const Transition& t, const Vec& noise) {
  if (!model.config().standard_prior) {
    throw UsageError("cvae_elbo: model was not built with a standard-normal prior");
  }
  return model.elbo(t, noise);
}

}  // namespace vdm
