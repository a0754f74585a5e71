#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "vdm/baselines.hpp"
#include "vdm/checkpoint.hpp"
#include "vdm/config.hpp"
#include "vdm/csv.hpp"
#include "vdm/data.hpp"
#include "vdm/intrinsic.hpp"

namespace vdm {

namespace fs = std::filesystem;

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t label) {
  return Rng::child(seed, label).next_u64();
}

// Everything one (config, seed) run owns. The training loop follows the
// per-episode schedule: collect T steps per actor with intrinsic rewards,
// one PPO update, then t_vdm model ascent steps.
class SeedRun {
 public:
  SeedRun(const RunConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    cfg_.validate();
    // normalizer from a random-policy pre-run on a dedicated env instance
    {
      auto env = make_env(cfg_.env, substream(seed, 1));
      Rng pre_rng = Rng::child(seed, 11);
      normalizer_ = fit_normalizer(*env, cfg_.normalizer_steps, pre_rng);
      obs_dim_ = env->obs_dim();
      num_actions_ = env->action_spec().n;
      state_keys_ = env->state_key_count();
    }
    if (!cfg_.raw_space) {
      features_ = std::make_unique<FeatureMap>(obs_dim_, cfg_.feature_hidden, cfg_.feature_dim,
                                               substream(seed, 2));
    }
    int model_dim = cfg_.raw_space ? obs_dim_ : cfg_.feature_dim;
    if (cfg_.algorithm == "vdm" || cfg_.algorithm == "cvae") {
      VdmConfig mc;
      mc.input_dim = model_dim;
      mc.action_dim = num_actions_;
      mc.target_dim = model_dim;
      mc.latent_dim = cfg_.latent_dim;
      mc.hidden = cfg_.model_hidden;
      mc.fc_layers = cfg_.model_fc_layers;
      mc.res_blocks = cfg_.model_res_blocks;
      mc.skip_connections = cfg_.skip_connections;
      mc.standard_prior = cfg_.algorithm == "cvae";
      mc.lr = cfg_.model_lr;
      model_ = std::make_unique<VdmModel>(mc, substream(seed, 3));
    } else if (cfg_.algorithm == "pred_error") {
      ForwardModelConfig fc;
      fc.input_dim = model_dim;
      fc.action_dim = num_actions_;
      fc.target_dim = model_dim;
      fc.hidden = cfg_.baseline_hidden;
      fc.layers = cfg_.baseline_layers;
      fc.lr = cfg_.model_lr;
      forward_ = std::make_unique<ForwardModel>(fc, substream(seed, 4));
    } else if (cfg_.algorithm == "disagreement") {
      EnsembleConfig ec;
      ec.size = cfg_.ensemble_size;
      ec.bootstrap = cfg_.ensemble_bootstrap;
      ec.member.input_dim = model_dim;
      ec.member.action_dim = num_actions_;
      ec.member.target_dim = model_dim;
      ec.member.hidden = cfg_.baseline_hidden;
      ec.member.layers = cfg_.baseline_layers;
      ec.member.lr = cfg_.model_lr;
      ensemble_ = std::make_unique<EnsembleModel>(ec, substream(seed, 5));
    }
    policy_ = std::make_unique<PolicyNet>(obs_dim_, num_actions_, cfg_.ppo, substream(seed, 6));
    for (int i = 0; i < cfg_.ppo.actors; ++i) {
      actors_.push_back(Actor{make_env(cfg_.env, substream(seed, 1000 + static_cast<std::uint64_t>(i))),
                              Rng::child(seed, 2000 + static_cast<std::uint64_t>(i)),
                              EnvObservation{}, 0.0});
    }
    reward_stat_ = RunningRewardStd(cfg_.ppo.actors, cfg_.ppo.gamma);
    model_rng_ = Rng::child(seed, 7);
    ppo_rng_ = Rng::child(seed, 8);
    visited_.assign(static_cast<std::size_t>(state_keys_), 0);
  }

  const RunConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<MetricsRow>& rows() const { return rows_; }
  PolicyNet& policy() { return *policy_; }
  const ObsNormalizer& normalizer() const { return normalizer_; }
  const FeatureMap* features() const { return features_.get(); }
  VdmModel* model() { return model_.get(); }
  long coverage() const { return coverage_; }

  IntrinsicFn intrinsic_fn() const {
    if (cfg_.algorithm == "vdm" || cfg_.algorithm == "cvae") {
      const VdmModel* m = model_.get();
      int k = cfg_.reward.k;
      return [m, k](const Transition& t, Rng& rng) { return intrinsic_reward_k(*m, t, k, rng); };
    }
    if (cfg_.algorithm == "pred_error") {
      const ForwardModel* m = forward_.get();
      return [m](const Transition& t, Rng&) { return pred_error_reward(*m, t); };
    }
    if (cfg_.algorithm == "disagreement") {
      const EnsembleModel* m = ensemble_.get();
      return [m](const Transition& t, Rng&) { return disagreement_reward(*m, t); };
    }
    return nullptr;  // random agent: no intrinsic signal
  }

  // Linear KL-weight ramp over the first quarter of the run; keeps the
  // latent channel alive before the prior has learned anything (see
  // VdmModel::train_step).
  double kl_weight_now() const {
    long per_iter = static_cast<long>(cfg_.ppo.actors) * cfg_.ppo.horizon;
    long total_iters = std::max<long>(1, cfg_.total_steps / std::max<long>(1, per_iter));
    double warm = std::max(1.0, 0.25 * static_cast<double>(total_iters));
    return std::min(1.0, static_cast<double>(iteration_ + 1) / warm);
  }

  // One collect -> PPO -> t_vdm model-updates iteration.
  MetricsRow iterate() {
    RolloutBatch batch = collect_rollouts(actors_, *policy_, normalizer_, features_.get(),
                                          intrinsic_fn(), cfg_.ppo.horizon,
                                          cfg_.ppo.actor_threads);
    if (cfg_.reward.normalize) {
      normalize_batch_rewards(batch, reward_stat_);
    } else {
      for (auto& s : batch.steps) s.reward_norm = s.reward_raw;
    }

    PpoDiagnostics diag;
    bool trains_policy = cfg_.algorithm != "random";
    if (trains_policy) {
      GaeResult gae = compute_gae(batch, cfg_.ppo.gamma, cfg_.ppo.lambda);
      diag = ppo_update(*policy_, batch, gae, cfg_.ppo, ppo_rng_);
      ppo_nan_incidents_ += diag.nan_incidents;
    }

    double model_loss = 0.0;
    int model_steps = 0;
    for (int u = 0; u < cfg_.t_vdm && has_model(); ++u) {
      std::vector<Transition> sample = sample_transitions(batch.transitions);
      double loss = 0.0;
      if (model_) {
        loss = model_->train_step(sample, model_rng_, kl_weight_now());
      } else if (forward_) {
        loss = forward_->train_step(sample);
      } else if (ensemble_) {
        loss = ensemble_->train_step(sample, model_rng_);
      }
      if (std::isfinite(loss)) {
        model_loss += loss;
        model_steps += 1;
      }
    }
    nan_incidents_ = ppo_nan_incidents_ + (model_ ? model_->nan_incidents() : 0);

    iteration_ += 1;
    global_step_ += static_cast<long>(batch.actors) * batch.horizon;
    episode_count_ += batch.episodes_completed;
    for (int key : batch.visited_keys) {
      std::size_t k = static_cast<std::size_t>(key);
      if (!visited_[k]) {
        visited_[k] = 1;
        coverage_ += 1;
      }
    }

    MetricsRow row;
    row.run_id = cfg_.run_id;
    row.seed = seed_;
    row.global_step = global_step_;
    row.episode_count = episode_count_;
    if (intrinsic_fn()) {
      double mean = 0.0;
      for (const auto& s : batch.steps) mean += s.reward_norm;
      row.mean_intrinsic_reward = mean / static_cast<double>(batch.steps.size());
    }
    if (batch.episodes_completed > 0) {
      row.mean_eval_extrinsic_reward = batch.episode_return_sum / batch.episodes_completed;
    }
    row.distinct_states_coverage = static_cast<double>(coverage_);
    if (model_steps > 0) row.vdm_loss = model_loss / model_steps;
    if (trains_policy) {
      row.policy_entropy = diag.entropy;
      row.clip_fraction = diag.clip_fraction;
    }
    // wall-clock stays on stdout; a populated column would break the
    // byte-identical rerun contract
    rows_.push_back(row);

    if (nan_incidents_ > 10) {
      throw RuntimeAbort("NaN storm: " + std::to_string(nan_incidents_) +
                         " non-finite losses; aborting after checkpoint");
    }
    return row;
  }

  void run_all() {
    long per_iter = static_cast<long>(cfg_.ppo.actors) * cfg_.ppo.horizon;
    long iters = cfg_.total_steps / per_iter;
    for (long i = 0; i < iters; ++i) iterate();
  }

  json checkpoint_json() const {
    json j;
    j["version"] = kCheckpointVersion;
    j["kind"] = "run";
    j["run_id"] = cfg_.run_id;
    j["seed"] = seed_;
    j["algorithm"] = cfg_.algorithm;
    j["env"] = env_params_to_json(cfg_.env);
    j["normalizer"] = normalizer_to_json(normalizer_);
    if (features_) {
      json f;
      f["seed"] = features_->seed();
      f["in_dim"] = features_->in_dim();
      f["hidden"] = features_->hidden();
      f["out_dim"] = features_->out_dim();
      j["feature_map"] = std::move(f);
    } else {
      j["feature_map"] = nullptr;
    }
    {
      json p;
      p["obs_dim"] = obs_dim_;
      p["num_actions"] = num_actions_;
      p["hidden"] = cfg_.ppo.hidden;
      p["trunk_layers"] = cfg_.ppo.trunk_layers;
      p["params"] = paramset_to_json(policy_->params());
      j["policy"] = std::move(p);
    }
    if (model_) {
      json m;
      m["config"] = vdm_config_to_json(model_->config());
      m["params"] = paramset_to_json(model_->params());
      j["model"] = std::move(m);
    } else {
      j["model"] = nullptr;
    }
    if (forward_) {
      json m;
      m["hidden"] = forward_->config().hidden;
      m["layers"] = forward_->config().layers;
      m["input_dim"] = forward_->config().input_dim;
      m["action_dim"] = forward_->config().action_dim;
      m["target_dim"] = forward_->config().target_dim;
      m["lr"] = forward_->config().lr;
      m["params"] = paramset_to_json(forward_->params());
      j["forward_model"] = std::move(m);
    } else {
      j["forward_model"] = nullptr;
    }
    if (ensemble_) {
      json arr = json::array();
      for (int e = 0; e < ensemble_->size(); ++e) {
        arr.push_back(paramset_to_json(ensemble_->member(e).params()));
      }
      json m;
      m["size"] = ensemble_->size();
      m["hidden"] = cfg_.baseline_hidden;
      m["layers"] = cfg_.baseline_layers;
      m["members"] = std::move(arr);
      j["ensemble"] = std::move(m);
    } else {
      j["ensemble"] = nullptr;
    }
    j["reward_stat"] = reward_stat_.serialize();
    json rngs;
    rngs["model"] = model_rng_.serialize();
    rngs["ppo"] = ppo_rng_.serialize();
    json actor_rngs = json::array();
    for (const auto& a : actors_) actor_rngs.push_back(a.rng.serialize());
    rngs["actors"] = std::move(actor_rngs);
    j["rng"] = std::move(rngs);
    json counters;
    counters["global_step"] = global_step_;
    counters["episode_count"] = episode_count_;
    counters["coverage"] = coverage_;
    j["counters"] = std::move(counters);
    return j;
  }

 private:
  bool has_model() const { return model_ || forward_ || ensemble_; }

  std::vector<Transition> sample_transitions(const std::vector<Transition>& pool) {
    std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(cfg_.model_batch),
                                             pool.size());
    std::vector<int> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    model_rng_.shuffle(idx);
    std::vector<Transition> out;
    out.reserve(want);
    for (std::size_t i = 0; i < want; ++i) out.push_back(pool[static_cast<std::size_t>(idx[i])]);
    return out;
  }

  RunConfig cfg_;
  std::uint64_t seed_;
  int obs_dim_ = 0, num_actions_ = 0, state_keys_ = 0;
  ObsNormalizer normalizer_;
  std::unique_ptr<FeatureMap> features_;
  std::unique_ptr<VdmModel> model_;
  std::unique_ptr<ForwardModel> forward_;
  std::unique_ptr<EnsembleModel> ensemble_;
  std::unique_ptr<PolicyNet> policy_;
  std::vector<Actor> actors_;
  RunningRewardStd reward_stat_;
  Rng model_rng_, ppo_rng_;
  std::vector<MetricsRow> rows_;
  std::vector<char> visited_;
  long iteration_ = 0;
  long global_step_ = 0;
  long episode_count_ = 0;
  long coverage_ = 0;
  int nan_incidents_ = 0;
  int ppo_nan_incidents_ = 0;
};

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::string csv_path;
  std::string checkpoint_path;
  std::vector<MetricsRow> rows;
  long coverage = 0;
};

inline SeedRunResult run_single_seed(const RunConfig& cfg, std::uint64_t seed) {
  fs::create_directories(cfg.out_dir);
  SeedRunResult res;
  res.seed = seed;
  res.csv_path = cfg.out_dir + "/" + cfg.run_id + "_seed" + std::to_string(seed) + ".csv";
  res.checkpoint_path =
      cfg.out_dir + "/" + cfg.run_id + "_seed" + std::to_string(seed) + ".ckpt.json";
  SeedRun run(cfg, seed);
  try {
    run.run_all();
  } catch (const RuntimeAbort&) {
    write_metrics_csv(res.csv_path, run.rows());
    write_checkpoint(res.checkpoint_path, run.checkpoint_json());
    throw;
  }
  res.rows = run.rows();
  res.coverage = run.coverage();
  write_metrics_csv(res.csv_path, res.rows);
  write_checkpoint(res.checkpoint_path, run.checkpoint_json());
  return res;
}

struct ExperimentResult {
  std::vector<SeedRunResult> seed_runs;
  std::string summary_path;
  std::vector<std::string> csv_paths;
};

// Merged mean +- std across seeds, keyed by logged row index.
inline std::string write_summary_csv(const RunConfig& cfg,
                                     const std::vector<SeedRunResult>& runs) {
  std::string path = cfg.out_dir + "/" + cfg.run_id + "_summary.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write summary CSV: " + path);
  const std::vector<std::string> metrics = {"mean_intrinsic_reward", "mean_eval_extrinsic_reward",
                                            "distinct_states_coverage", "vdm_loss",
                                            "policy_entropy", "clip_fraction"};
  out << "run_id,global_step,n_seeds";
  for (const auto& m : metrics) out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  std::size_t n_rows = 0;
  for (const auto& r : runs) n_rows = std::max(n_rows, r.rows.size());
  for (std::size_t i = 0; i < n_rows; ++i) {
    long step = 0;
    std::vector<Vec> cols(metrics.size());
    for (const auto& r : runs) {
      if (i >= r.rows.size()) continue;
      const MetricsRow& row = r.rows[i];
      step = row.global_step;
      const std::optional<double> vals[] = {row.mean_intrinsic_reward,
                                            row.mean_eval_extrinsic_reward,
                                            row.distinct_states_coverage,
                                            row.vdm_loss,
                                            row.policy_entropy,
                                            row.clip_fraction};
      for (std::size_t c = 0; c < metrics.size(); ++c) {
        if (vals[c]) cols[c].push_back(*vals[c]);
      }
    }
    out << cfg.run_id << ',' << step << ',' << runs.size();
    for (std::size_t c = 0; c < metrics.size(); ++c) {
      if (cols[c].empty()) {
        out << ",,";
        continue;
      }
      double mean = 0.0;
      for (double v : cols[c]) mean += v;
      mean /= static_cast<double>(cols[c].size());
      double var = 0.0;
      for (double v : cols[c]) var += (v - mean) * (v - mean);
      var /= static_cast<double>(cols[c].size());
      out << ',' << format_double(mean) << ',' << format_double(std::sqrt(var));
    }
    out << '\n';
  }
  return path;
}

// Runs every seed (optionally on parallel threads; seeds are independent),
// then writes the cross-seed summary.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  ExperimentResult result;
  result.seed_runs.resize(cfg.seeds.size());
  int workers = std::max(1, std::min<int>(cfg.parallel_seeds,
                                          static_cast<int>(cfg.seeds.size())));
  std::exception_ptr first_error;
  std::mutex error_mu;
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      result.seed_runs[i] = run_single_seed(cfg, cfg.seeds[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < cfg.seeds.size(); i = next.fetch_add(1)) {
          try {
            result.seed_runs[i] = run_single_seed(cfg, cfg.seeds[i]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  for (const auto& r : result.seed_runs) result.csv_paths.push_back(r.csv_path);
  result.summary_path = write_summary_csv(cfg, result.seed_runs);
  return result;
}

// --- checkpoint loading & evaluation ---

struct LoadedRun {
  json raw;
  std::string algorithm;
  EnvParams env;
  ObsNormalizer normalizer;
  std::unique_ptr<FeatureMap> features;
  std::unique_ptr<PolicyNet> policy;
  std::unique_ptr<VdmModel> model;
};

inline LoadedRun load_run_checkpoint(const std::string& path) {
  LoadedRun lr;
  lr.raw = read_checkpoint(path);
  lr.algorithm = lr.raw.at("algorithm").get<std::string>();
  lr.env = env_params_from_json(lr.raw.at("env"));
  lr.normalizer = normalizer_from_json(lr.raw.at("normalizer"));
  if (!lr.raw.at("feature_map").is_null()) {
    const json& f = lr.raw.at("feature_map");
    lr.features = std::make_unique<FeatureMap>(f.at("in_dim").get<int>(),
                                               f.at("hidden").get<int>(),
                                               f.at("out_dim").get<int>(),
                                               f.at("seed").get<std::uint64_t>());
  }
  {
    const json& p = lr.raw.at("policy");
    PpoConfig pc;
    pc.hidden = p.at("hidden").get<int>();
    pc.trunk_layers = p.at("trunk_layers").get<int>();
    lr.policy = std::make_unique<PolicyNet>(p.at("obs_dim").get<int>(),
                                            p.at("num_actions").get<int>(), pc, 0);
    paramset_from_json(p.at("params"), lr.policy->params());
  }
  if (!lr.raw.at("model").is_null()) {
    const json& m = lr.raw.at("model");
    lr.model = std::make_unique<VdmModel>(vdm_config_from_json(m.at("config")), 0);
    paramset_from_json(m.at("params"), lr.model->params());
  }
  return lr;
}

struct EvalReport {
  int episodes = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  long distinct_states = 0;
};

// Sampled-action evaluation, no learning; extrinsic returns and coverage.
inline EvalReport evaluate_policy(const PolicyNet& policy, const ObsNormalizer& norm, Env& env,
                                  int episodes, Rng& rng) {
  EvalReport report;
  report.episodes = episodes;
  if (episodes <= 0) return report;
  std::set<int> seen;
  Vec returns;
  for (int e = 0; e < episodes; ++e) {
    EnvObservation obs = env.reset();
    seen.insert(env.state_key());
    double ret = 0.0;
    while (!obs.episode_done) {
      PolicyNet::ActResult act = policy.act(norm.apply(obs.state), rng);
      obs = env.step(act.action);
      ret += obs.extrinsic_reward;
      seen.insert(env.state_key());
    }
    returns.push_back(ret);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= static_cast<double>(returns.size());
  report.mean_return = mean;
  report.std_return = std::sqrt(var);
  report.distinct_states = static_cast<long>(seen.size());
  return report;
}

// Evaluation entry for the CLI: checkpoint env must match the configured env.
inline EvalReport evaluate_checkpoint(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.eval_checkpoint.empty()) {
    throw ConfigError("evaluate: eval.checkpoint must name a checkpoint file");
  }
  LoadedRun lr = load_run_checkpoint(cfg.eval_checkpoint);
  if (!(lr.env == cfg.env)) {
    throw ConfigError("evaluate: checkpoint environment does not match the configured one");
  }
  auto env = make_env(lr.env, substream(seed, 21));
  Rng rng = Rng::child(seed, 22);
  return evaluate_policy(*lr.policy, lr.normalizer, *env, cfg.eval_episodes, rng);
}

}  // namespace vdm
