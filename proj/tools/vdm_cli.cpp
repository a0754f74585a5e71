// Experiment CLI: self-supervised exploration with a variational dynamic
// model on synthetic MDPs. Verbs: train, evaluate, ablate, plot,
// demo-noisydigits. Exit codes: 0 success, 1 configuration error, 2 runtime
// abort.

#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "vdm/ablation.hpp"
#include "vdm/ensemble_demo.hpp"
#include "vdm/experiment.hpp"
#include "vdm/svg_plot.hpp"

namespace {

vdm::RunConfig load_config(const std::string& config_path, long seed_override,
                           const std::string& out_override) {
  if (config_path.empty()) throw vdm::ConfigError("--config is required");
  vdm::KeyValueConfig kv = vdm::KeyValueConfig::parse_file(config_path);
  if (seed_override >= 0) kv.set("run.seeds", std::to_string(seed_override));
  if (!out_override.empty()) kv.set("run.out", out_override);
  return vdm::run_config_from(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised exploration experiments (variational dynamic model)"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  long seed_override = -1;
  std::string out_override;
  app.add_option("--config", config_path, "config file (key = value lines)");
  app.add_option("--seed", seed_override, "override run.seeds with a single seed");
  app.add_option("--out", out_override, "override the output directory");

  CLI::App* train = app.add_subcommand("train", "run the exploration experiment");
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a trained checkpoint");
  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation sweep");
  std::string suite;
  ablate->add_option("--suite", suite, "k-sweep | tvdm-sweep | latent-sweep | skip-sweep")
      ->required();
  CLI::App* plot = app.add_subcommand("plot", "render SVG curves from metrics CSVs");
  std::vector<std::string> csv_paths;
  plot->add_option("csvs", csv_paths, "per-seed metrics CSV files")->required();
  CLI::App* demo = app.add_subcommand("demo-noisydigits", "probabilistic-ensemble study");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      vdm::RunConfig cfg = load_config(config_path, seed_override, out_override);
      auto t0 = std::chrono::steady_clock::now();
      vdm::ExperimentResult res = vdm::run_experiment(cfg);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (const auto& r : res.seed_runs) {
        std::cout << "seed " << r.seed << ": " << r.csv_path << " (coverage " << r.coverage
                  << ")\n";
      }
      std::cout << "summary: " << res.summary_path << "\n";
      std::cout << "wall-clock seconds: " << secs << "\n";
    } else if (evaluate->parsed()) {
      vdm::RunConfig cfg = load_config(config_path, -1, out_override);
      std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : 0;
      vdm::EvalReport rep = vdm::evaluate_checkpoint(cfg, seed);
      std::cout << "episodes: " << rep.episodes << "\n";
      if (rep.episodes > 0) {
        std::cout << "mean extrinsic return: " << rep.mean_return << " +- " << rep.std_return
                  << "\n";
        std::cout << "distinct states: " << rep.distinct_states << "\n";
      }
    } else if (ablate->parsed()) {
      vdm::RunConfig cfg = load_config(config_path, seed_override, out_override);
      auto cells = vdm::run_ablation(cfg, suite);
      std::string path = vdm::write_ablation_csv(cfg.out_dir, cells);
      for (const auto& c : cells) {
        std::cout << c.suite << " " << c.cell << ": " << c.metric << " = " << c.mean << " +- "
                  << c.stddev << "\n";
      }
      std::cout << "ablation CSV: " << path << "\n";
    } else if (plot->parsed()) {
      std::string out = out_override.empty() ? "." : out_override;
      std::filesystem::create_directories(out);
      for (const auto& svg : vdm::emit_plots(csv_paths, out)) {
        std::cout << "wrote " << svg << "\n";
      }
    } else if (demo->parsed()) {
      vdm::EnsembleDemoConfig dcfg;
      std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : 0;
      std::string out = out_override.empty() ? "." : out_override;
      std::filesystem::create_directories(out);
      std::string csv = out + "/ensemble_demo.csv";
      vdm::EnsembleDemoReport rep = vdm::ensemble_demo_noisydigits(dcfg, seed, csv);
      for (const auto& m : rep.members) {
        std::cout << "member " << m.member << ": distinct classes from class-1 states = "
                  << m.distinct_classes_from_class1
                  << ", class-0 -> class-1 frequency = " << m.class0_to_1_freq << "\n";
      }
      std::cout << "mean decoded-class entropy: " << rep.mean_entropy << "\n";
      std::cout << "wrote " << csv << "\n";
    }
  } catch (const vdm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
