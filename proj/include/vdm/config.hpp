#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vdm/envs.hpp"
#include "vdm/intrinsic.hpp"
#include "vdm/ppo.hpp"

namespace vdm {

// Flat key-value config: one `key = value` per line, `#` comments, namespaced
// keys. Unknown keys fail fast.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string s = strip_comment(line);
      if (trim(s).empty()) continue;
      std::size_t eq = s.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert({key, true});
    return it->second;
  }

  double get_double(const std::string& key, double dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert({key, true});
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected number, got '" + it->second + "'");
    }
  }

  long get_long(const std::string& key, long dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert({key, true});
    try {
      std::size_t pos = 0;
      long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected integer, got '" + it->second + "'");
    }
  }

  int get_int(const std::string& key, int dflt) {
    return static_cast<int>(get_long(key, dflt));
  }

  bool get_bool(const std::string& key, bool dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert({key, true});
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + it->second + "'");
  }

  std::vector<std::uint64_t> get_seed_list(const std::string& key,
                                           const std::vector<std::uint64_t>& dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert({key, true});
    std::vector<std::uint64_t> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::string v = trim(item);
      if (v.empty()) continue;
      try {
        out.push_back(static_cast<std::uint64_t>(std::stoull(v)));
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad seed '" + v + "'");
      }
    }
    return out;
  }

  // Unknown keys are configuration errors; call after reading all fields.
  void reject_unconsumed() const {
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) {
        throw ConfigError("unresolvable config key '" + key + "'");
      }
    }
  }

 private:
  static std::string strip_comment(const std::string& s) {
    std::size_t h = s.find('#');
    return h == std::string::npos ? s : s.substr(0, h);
  }
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> consumed_;
};

// Full experiment description; every knob reachable from the config file.
struct RunConfig {
  std::string run_id;
  std::string algorithm = "vdm";  // vdm | pred_error | disagreement | cvae | random
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  long total_steps = 200000;
  std::string out_dir = "out";
  int parallel_seeds = 1;

  EnvParams env;
  int normalizer_steps = 10000;

  PpoConfig ppo;

  // dynamics model
  int feature_dim = 512;
  int feature_hidden = 256;
  int latent_dim = 128;
  int model_hidden = 256;
  int model_fc_layers = 2;
  int model_res_blocks = 3;
  bool skip_connections = true;
  bool raw_space = false;
  double model_lr = 1e-4;
  int model_batch = 256;
  int t_vdm = 3;

  RewardConfig reward;

  // baselines
  int ensemble_size = 5;
  bool ensemble_bootstrap = false;
  int baseline_hidden = 64;
  int baseline_layers = 2;

  // evaluation verb
  std::string eval_checkpoint;
  int eval_episodes = 100;

  void validate() const {
    if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
    if (algorithm != "vdm" && algorithm != "pred_error" && algorithm != "disagreement" &&
        algorithm != "cvae" && algorithm != "random") {
      throw ConfigError("run.algorithm '" + algorithm + "' is not one of "
                        "vdm|pred_error|disagreement|cvae|random");
    }
    if (total_steps < 0) throw ConfigError("run.total_steps must be >= 0");
    if (reward.k < 1) throw ConfigError("reward.k must be >= 1");
    if (t_vdm < 0) throw ConfigError("vdm.tvdm must be >= 0");
    ppo.validate();
  }
};

inline RunConfig run_config_from(KeyValueConfig& kv) {
  RunConfig c;
  c.algorithm = kv.get_string("run.algorithm", c.algorithm);
  c.seeds = kv.get_seed_list("run.seeds", c.seeds);
  c.total_steps = kv.get_long("run.total_steps", c.total_steps);
  c.out_dir = kv.get_string("run.out", c.out_dir);
  c.parallel_seeds = kv.get_int("run.parallel_seeds", c.parallel_seeds);

  c.env.name = kv.get_string("env.name", "stoch_grid");
  c.env.sticky_tau = kv.get_double("env.sticky_tau", 0.0);
  c.env.noisy.style_dim = kv.get_int("env.style_dim", c.env.noisy.style_dim);
  c.env.noisy.style_std = kv.get_double("env.style_std", c.env.noisy.style_std);
  c.env.noisy.episode_len = kv.get_int("env.episode_len", c.env.noisy.episode_len);
  c.normalizer_steps = kv.get_int("env.normalizer_steps", c.normalizer_steps);

  c.run_id = kv.get_string("run.id", c.algorithm + "_" + c.env.name);

  c.ppo.gamma = kv.get_double("ppo.gamma", c.ppo.gamma);
  c.ppo.lambda = kv.get_double("ppo.lambda", c.ppo.lambda);
  c.ppo.lr = kv.get_double("ppo.lr", c.ppo.lr);
  c.ppo.entropy_coef = kv.get_double("ppo.entropy_coef", c.ppo.entropy_coef);
  c.ppo.value_coef = kv.get_double("ppo.value_coef", c.ppo.value_coef);
  c.ppo.clip_eps = kv.get_double("ppo.clip_eps", c.ppo.clip_eps);
  c.ppo.epochs = kv.get_int("ppo.epochs", c.ppo.epochs);
  c.ppo.minibatches = kv.get_int("ppo.minibatches", c.ppo.minibatches);
  c.ppo.actors = kv.get_int("ppo.actors", c.ppo.actors);
  c.ppo.horizon = kv.get_int("ppo.horizon", c.ppo.horizon);
  c.ppo.hidden = kv.get_int("ppo.hidden", c.ppo.hidden);
  c.ppo.trunk_layers = kv.get_int("ppo.trunk_layers", c.ppo.trunk_layers);
  c.ppo.actor_threads = kv.get_int("ppo.actor_threads", c.ppo.actor_threads);

  c.feature_dim = kv.get_int("vdm.feature_dim", c.feature_dim);
  c.feature_hidden = kv.get_int("vdm.feature_hidden", c.feature_hidden);
  c.latent_dim = kv.get_int("vdm.latent_dim", c.latent_dim);
  c.model_hidden = kv.get_int("vdm.hidden", c.model_hidden);
  c.model_fc_layers = kv.get_int("vdm.fc_layers", c.model_fc_layers);
  c.model_res_blocks = kv.get_int("vdm.res_blocks", c.model_res_blocks);
  c.skip_connections = kv.get_bool("vdm.skip", c.skip_connections);
  c.raw_space = kv.get_bool("vdm.raw_space", c.raw_space);
  c.model_lr = kv.get_double("vdm.lr", c.model_lr);
  c.model_batch = kv.get_int("vdm.batch", c.model_batch);
  c.t_vdm = kv.get_int("vdm.tvdm", c.t_vdm);

  c.reward.k = kv.get_int("reward.k", c.reward.k);
  c.reward.normalize = kv.get_bool("reward.normalize", c.reward.normalize);

  c.ensemble_size = kv.get_int("baseline.ensemble_size", c.ensemble_size);
  c.ensemble_bootstrap = kv.get_bool("baseline.bootstrap", c.ensemble_bootstrap);
  c.baseline_hidden = kv.get_int("baseline.hidden", c.baseline_hidden);
  c.baseline_layers = kv.get_int("baseline.layers", c.baseline_layers);

  c.eval_checkpoint = kv.get_string("eval.checkpoint", c.eval_checkpoint);
  c.eval_episodes = kv.get_int("eval.episodes", c.eval_episodes);

  kv.reject_unconsumed();
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  KeyValueConfig kv = KeyValueConfig::parse_file(path);
  return run_config_from(kv);
}

}  // namespace vdm
