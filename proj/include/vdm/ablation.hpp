#pragma once

#include <fstream>

#include "vdm/experiment.hpp"
#include "vdm/model_study.hpp"

namespace vdm {

struct AblationCell {
  std::string suite;
  std::string cell;
  int n_seeds = 0;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
};

namespace ablation_detail {

inline AblationCell summarize(const std::string& suite, const std::string& cell,
                              const std::string& metric, const Vec& per_seed) {
  AblationCell out;
  out.suite = suite;
  out.cell = cell;
  out.metric = metric;
  out.n_seeds = static_cast<int>(per_seed.size());
  for (double v : per_seed) out.mean += v;
  out.mean /= static_cast<double>(per_seed.size());
  for (double v : per_seed) out.stddev += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(out.stddev / static_cast<double>(per_seed.size()));
  return out;
}

// Coverage proxy over the final quarter of the logged curve: mean of the
// per-episode extrinsic return column.
inline double final_quarter_coverage(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t begin = rows.size() - rows.size() / 4 - 1;
  double acc = 0.0;
  int n = 0;
  for (std::size_t i = begin; i < rows.size(); ++i) {
    if (rows[i].mean_eval_extrinsic_reward) {
      acc += *rows[i].mean_eval_extrinsic_reward;
      n += 1;
    }
  }
  return n > 0 ? acc / n : 0.0;
}

}  // namespace ablation_detail

// Ablation suites:
//   k-sweep     exploration runs at k in {1, 10}
//   tvdm-sweep  exploration runs at t_vdm in {3, 5, 7}
//   latent-sweep  held-out bound on NoisyDigits across latent sizes
//   skip-sweep    held-out bound on NoisyDigits with skip connections on/off
inline std::vector<AblationCell> run_ablation(const RunConfig& base, const std::string& suite,
                                              NoisyDigitsStudyConfig study_base =
                                                  NoisyDigitsStudyConfig{}) {
  std::vector<AblationCell> cells;
  if (suite == "k-sweep" || suite == "tvdm-sweep") {
    std::vector<int> values = suite == "k-sweep" ? std::vector<int>{1, 10}
                                                 : std::vector<int>{3, 5, 7};
    for (int v : values) {
      RunConfig cfg = base;
      if (suite == "k-sweep") {
        cfg.reward.k = v;
        cfg.run_id = base.run_id + "_k" + std::to_string(v);
      } else {
        cfg.t_vdm = v;
        cfg.run_id = base.run_id + "_tvdm" + std::to_string(v);
      }
      ExperimentResult res = run_experiment(cfg);
      Vec per_seed;
      for (const auto& r : res.seed_runs) {
        per_seed.push_back(ablation_detail::final_quarter_coverage(r.rows));
      }
      cells.push_back(ablation_detail::summarize(suite, std::to_string(v),
                                                 "final_quarter_episode_coverage", per_seed));
    }
  } else if (suite == "skip-sweep" || suite == "latent-sweep") {
    std::vector<std::pair<std::string, NoisyDigitsStudyConfig>> variants;
    if (suite == "skip-sweep") {
      NoisyDigitsStudyConfig on = study_base;
      on.skip_connections = true;
      NoisyDigitsStudyConfig off = study_base;
      off.skip_connections = false;
      variants = {{"on", on}, {"off", off}};
    } else {
      for (int c : {4, 16, 64}) {
        NoisyDigitsStudyConfig v = study_base;
        v.latent_dim = c;
        variants.push_back({std::to_string(c), v});
      }
    }
    for (const auto& [name, study_cfg] : variants) {
      Vec per_seed;
      for (std::uint64_t seed : base.seeds) {
        TrainedStudy study = train_noisydigits_model(study_cfg, seed);
        Rng eval_rng = Rng::child(seed, 35);
        per_seed.push_back(mean_elbo(*study.model, study.heldout, 8, eval_rng));
      }
      cells.push_back(ablation_detail::summarize(suite, name, "heldout_elbo", per_seed));
    }
  } else {
    throw ConfigError("run_ablation: unknown suite '" + suite +
                      "' (expected k-sweep|tvdm-sweep|latent-sweep|skip-sweep)");
  }
  return cells;
}

inline std::string write_ablation_csv(const std::string& out_dir,
                                      const std::vector<AblationCell>& cells) {
  fs::create_directories(out_dir);
  std::string path = out_dir + "/ablation.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write ablation CSV: " + path);
  out << "suite,cell,n_seeds,metric,mean,std\n";
  for (const auto& c : cells) {
    out << c.suite << ',' << c.cell << ',' << c.n_seeds << ',' << c.metric << ','
        << format_double(c.mean) << ',' << format_double(c.stddev) << '\n';
  }
  return path;
}

}  // namespace vdm
