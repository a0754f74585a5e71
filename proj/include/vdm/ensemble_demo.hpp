#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "vdm/baselines.hpp"
#include "vdm/data.hpp"

namespace vdm {

// Probabilistic-ensemble study on the NoisyDigits MDP: three Gaussian-output
// forward models trained by supervised learning in raw state space. Each
// member averages the eight plausible successors of a class-1 state, so its
// decoded predictions cover very few distinct classes; class-0 inputs decode
// to class 1 almost always.
struct EnsembleDemoMemberReport {
  int member = 0;
  int distinct_classes_from_class1 = 0;
  double class_histogram_entropy = 0.0;  // over decoded classes at class-1 inputs
  double class0_to_1_freq = 0.0;
};

struct EnsembleDemoReport {
  std::vector<EnsembleDemoMemberReport> members;
  double mean_entropy = 0.0;
};

struct EnsembleDemoConfig {
  NoisyDigitsConfig env;
  int members = 3;
  int hidden = 64;
  int layers = 2;
  int dataset_size = 4000;
  int epochs = 200;
  int batch_size = 256;
  double lr = 1e-3;
  int eval_states = 400;
  bool train = true;  // untrained ensembles serve as the negative control
};

inline EnsembleDemoReport evaluate_ensemble_demo(const EnsembleModel& ensemble,
                                                 const NoisyDigitsConfig& env_cfg,
                                                 int eval_states, Rng& rng) {
  int nc = env_cfg.num_classes;
  Vec a0 = one_hot(0, 2);
  EnsembleDemoReport report;
  for (int m = 0; m < ensemble.size(); ++m) {
    EnsembleDemoMemberReport r;
    r.member = m;
    std::map<int, int> histogram;
    int class0_hits = 0;
    for (int i = 0; i < eval_states; ++i) {
      // random style draws around each class block
      auto make_state = [&](int cls) {
        Vec s = one_hot(cls, nc);
        for (int j = 0; j < env_cfg.style_dim; ++j) {
          s.push_back(rng.normal(0.0, env_cfg.style_std));
        }
        return s;
      };
      Vec s1 = make_state(1);
      Vec pred = ensemble.member(m).predict(s1, a0);
      histogram[argmax(pred, 0, nc)] += 1;

      Vec s0 = make_state(0);
      Vec pred0 = ensemble.member(m).predict(s0, a0);
      if (argmax(pred0, 0, nc) == 1) class0_hits += 1;
    }
    r.distinct_classes_from_class1 = static_cast<int>(histogram.size());
    double h = 0.0;
    for (const auto& [cls, count] : histogram) {
      double p = static_cast<double>(count) / eval_states;
      h -= p * std::log(p);
    }
    r.class_histogram_entropy = h;
    r.class0_to_1_freq = static_cast<double>(class0_hits) / eval_states;
    report.mean_entropy += h;
    report.members.push_back(r);
  }
  report.mean_entropy /= static_cast<double>(ensemble.size());
  return report;
}

inline EnsembleDemoReport ensemble_demo_noisydigits(const EnsembleDemoConfig& cfg,
                                                    std::uint64_t seed,
                                                    const std::string& csv_path = "") {
  NoisyDigitsEnv env(cfg.env, Rng::child(seed, 1).next_u64());
  Rng data_rng = Rng::child(seed, 2);
  std::vector<Transition> data = collect_raw_transitions(env, cfg.dataset_size, data_rng);

  EnsembleConfig ecfg;
  ecfg.size = cfg.members;
  ecfg.member.input_dim = env.obs_dim();
  ecfg.member.action_dim = 2;
  ecfg.member.target_dim = env.obs_dim();
  ecfg.member.hidden = cfg.hidden;
  ecfg.member.layers = cfg.layers;
  ecfg.member.probabilistic = true;
  ecfg.member.lr = cfg.lr;
  EnsembleModel ensemble(ecfg, Rng::child(seed, 3).next_u64());

  Rng train_rng = Rng::child(seed, 4);
  if (cfg.train) {
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      train_rng.shuffle(order);
      for (std::size_t start = 0; start < data.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        std::size_t end = std::min(start + static_cast<std::size_t>(cfg.batch_size), data.size());
        std::vector<Transition> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          batch.push_back(data[static_cast<std::size_t>(order[i])]);
        }
        ensemble.train_step(batch, train_rng);
      }
    }
  }

  Rng eval_rng = Rng::child(seed, 5);
  EnsembleDemoReport report = evaluate_ensemble_demo(ensemble, cfg.env, cfg.eval_states, eval_rng);

  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ConfigError("ensemble_demo_noisydigits: cannot write " + csv_path);
    out << "member,distinct_classes_from_class1,class_histogram_entropy,class0_to_1_freq\n";
    for (const auto& r : report.members) {
      out << r.member << ',' << r.distinct_classes_from_class1 << ',' << r.class_histogram_entropy
          << ',' << r.class0_to_1_freq << '\n';
    }
  }
  return report;
}

}  // namespace vdm
