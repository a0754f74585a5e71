#pragma once

#include <memory>
#include <numeric>

#include "vdm/data.hpp"
#include "vdm/intrinsic.hpp"

namespace vdm {

// Raw-space NoisyDigits model training: the generative head predicts the raw
// next state so model likelihoods are directly comparable with the exact
// oracle. Shared by the CVAE comparison, the skip/latent ablations and the
// bound-verification experiments.
struct NoisyDigitsStudyConfig {
  NoisyDigitsConfig env;
  int latent_dim = 16;
  int hidden = 64;
  int fc_layers = 2;
  int res_blocks = 2;
  int gen_fc_layers = 2;
  int gen_res_blocks = 2;
  bool skip_connections = true;
  bool standard_prior = false;
  double lr = 1e-3;
  double lr_final = 1e-4;  // exponential decay after the KL warm-up
  int transitions_per_epoch = 2000;  // fresh on-stream data every epoch
  int heldout_size = 1000;
  int epochs = 200;
  int batch_size = 256;
  double kl_warmup_frac = 0.25;  // linear KL-weight ramp over the first quarter

  // The oracle-comparison studies run on the dequantized variant: bounds of
  // a continuous density model against the exact likelihood only make sense
  // when every state coordinate is continuous.
  NoisyDigitsStudyConfig() { env.class_jitter_std = 0.15; }
};

struct TrainedStudy {
  std::unique_ptr<NoisyDigitsEnv> env;
  std::unique_ptr<VdmModel> model;
  std::vector<Transition> train_set;
  std::vector<Transition> heldout;
  Vec epoch_losses;
};

inline VdmConfig study_model_config(const NoisyDigitsStudyConfig& cfg, int obs_dim,
                                    int num_actions) {
  VdmConfig mc;
  mc.input_dim = obs_dim;
  mc.action_dim = num_actions;
  mc.target_dim = obs_dim;
  mc.latent_dim = cfg.latent_dim;
  mc.hidden = cfg.hidden;
  mc.fc_layers = cfg.fc_layers;
  mc.res_blocks = cfg.res_blocks;
  mc.gen_fc_layers = cfg.gen_fc_layers;
  mc.gen_res_blocks = cfg.gen_res_blocks;
  mc.skip_connections = cfg.skip_connections;
  mc.standard_prior = cfg.standard_prior;
  mc.lr = cfg.lr;
  return mc;
}

// Each epoch trains on freshly collected transitions (the on-policy data
// stream of the source setting: the model never revisits a fixed dataset).
inline TrainedStudy train_noisydigits_model(const NoisyDigitsStudyConfig& cfg,
                                            std::uint64_t seed) {
  TrainedStudy study;
  study.env = std::make_unique<NoisyDigitsEnv>(cfg.env, Rng::child(seed, 31).next_u64());
  Rng data_rng = Rng::child(seed, 32);
  study.heldout = collect_raw_transitions(*study.env, cfg.heldout_size, data_rng);

  study.model = std::make_unique<VdmModel>(
      study_model_config(cfg, study.env->obs_dim(), study.env->action_spec().n),
      Rng::child(seed, 33).next_u64());

  Rng train_rng = Rng::child(seed, 34);
  double warm = std::max(1.0, cfg.kl_warmup_frac * cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double kl_weight = std::min(1.0, (epoch + 1) / warm);
    double progress = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 1.0;
    study.model->set_lr(cfg.lr * std::pow(cfg.lr_final / cfg.lr, progress));
    study.train_set = collect_raw_transitions(*study.env, cfg.transitions_per_epoch, data_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < study.train_set.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(start + static_cast<std::size_t>(cfg.batch_size), study.train_set.size());
      std::vector<Transition> batch(study.train_set.begin() + static_cast<std::ptrdiff_t>(start),
                                    study.train_set.begin() + static_cast<std::ptrdiff_t>(end));
      epoch_loss += study.model->train_step(batch, train_rng, kl_weight);
      batches += 1;
    }
    study.epoch_losses.push_back(epoch_loss / batches);
  }
  return study;
}

// Mean multi-sample lower bound over a transition set.
inline double mean_elbo(const VdmModel& model, const std::vector<Transition>& transitions,
                        int samples_per_transition, Rng& rng) {
  double acc = 0.0;
  for (const Transition& t : transitions) {
    double s = 0.0;
    for (int i = 0; i < samples_per_transition; ++i) {
      s += model.elbo(t, rng.normal_vec(static_cast<std::size_t>(model.config().latent_dim)));
    }
    acc += s / samples_per_transition;
  }
  return acc / static_cast<double>(transitions.size());
}

// Per-transition bound vs the exact oracle likelihood.
struct BoundCheck {
  double elbo_mean = 0.0;
  double oracle = 0.0;
};

inline BoundCheck bound_check(const VdmModel& model, const NoisyDigitsEnv& env,
                              const Transition& t, int samples, Rng& rng) {
  BoundCheck out;
  double s = 0.0;
  for (int i = 0; i < samples; ++i) {
    s += model.elbo(t, rng.normal_vec(static_cast<std::size_t>(model.config().latent_dim)));
  }
  out.elbo_mean = s / samples;
  out.oracle = env.oracle_logprob(t.s, t.action, t.sp);
  return out;
}

// Decodes prior samples at a given state and histograms the nearest class of
// the generated mean prediction.
inline std::vector<int> prior_sample_class_histogram(const VdmModel& model,
                                                     const NoisyDigitsEnv& env, const Vec& state,
                                                     const Vec& a_onehot, int samples, Rng& rng) {
  std::vector<int> counts(static_cast<std::size_t>(env.config().num_classes), 0);
  VdmModel::PriorEval prior = model.prior_eval(state, a_onehot);
  for (int i = 0; i < samples; ++i) {
    Vec z = reparam_sample(prior.dist, rng.normal_vec(prior.dist.mean.size()));
    DiagGaussian g = model.generate_with_hidden(prior.hidden, z);
    counts[static_cast<std::size_t>(env.class_of(g.mean))] += 1;
  }
  return counts;
}

}  // namespace vdm
