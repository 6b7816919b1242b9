// Experiment driver: train, eval, baseline, summarize.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "aris/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace aris;

struct Overrides {
  std::optional<std::size_t> steps, eval_interval, episodes;
  std::optional<std::string> algorithm, baseline;

  void apply(ExperimentConfig& cfg) const {
    if (steps) {
      cfg.train.total_steps = *steps;
      cfg.train.replay.anneal_steps = *steps;
    }
    if (eval_interval) cfg.train.eval_interval = *eval_interval;
    if (episodes) cfg.train.eval_episodes = *episodes;
    if (algorithm) cfg.train.algorithm = parse_algorithm(*algorithm);
    if (baseline) cfg.env.scheme = parse_scheme(*baseline);
  }
};

void add_overrides(CLI::App* cmd, Overrides& o, bool training) {
  if (training) {
    cmd->add_option("--steps", o.steps, "Total environment steps");
    cmd->add_option("--algorithm", o.algorithm, "sac-per | sac-uniform | random-policy");
    cmd->add_option("--eval-interval", o.eval_interval, "Episodes between evaluations (0: off)");
  }
  cmd->add_option("--episodes", o.episodes, "Evaluation episodes");
}

void print_eval(const std::string& label, const EvalSummary& e) {
  std::cout << label << " mean_sum_rate=" << e.mean_sum_rate << " std_sum_rate=" << e.std_sum_rate
            << " mean_energy_used=" << e.mean_energy_used << '\n';
}

void train_seeds(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, const fs::path& out) {
  for (std::uint64_t seed : seeds) {
    const fs::path dir = out / ("seed_" + std::to_string(seed));
    Trainer t(cfg, seed);
    const EvalSummary e = train_to_directory(t, dir, false, &std::cout);
    print_eval(dir.string(), e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  retain_heap_memory();
  CLI::App app{"Aerial RIS experiment driver"};
  app.require_subcommand(1);

  std::string config_path, checkpoint;
  std::vector<std::uint64_t> seeds;
  std::string out = "runs";
  Overrides ov;

  auto* train = app.add_subcommand("train", "Train an agent; resume with --checkpoint");
  train->add_option("--config", config_path, "Scenario and training config file");
  train->add_option("--seed", seeds, "Seed (repeatable)")->take_all();
  train->add_option("--out", out, "Output directory");
  train->add_option("--checkpoint", checkpoint, "Checkpoint directory to resume from");
  train->add_option("--baseline", ov.baseline, "proposed | fixed-ris | random-phase | no-tilt | ignore-tilt");
  add_overrides(train, ov, true);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--out", out, "Output directory");
  eval->add_option("--baseline", ov.baseline, "Override the scheme at evaluation time");
  add_overrides(eval, ov, false);

  auto* baseline = app.add_subcommand("baseline", "Train and evaluate under a comparison scheme");
  baseline->add_option("--config", config_path, "Scenario and training config file")->required();
  baseline->add_option("--baseline", ov.baseline, "fixed-ris | random-phase | no-tilt | ignore-tilt | proposed")
      ->required();
  baseline->add_option("--seed", seeds, "Seed (repeatable)")->take_all();
  baseline->add_option("--out", out, "Output directory");
  add_overrides(baseline, ov, true);

  std::vector<std::string> roots;
  std::string summary_out;
  auto* summarize = app.add_subcommand("summarize", "Aggregate summary.txt files into one CSV");
  summarize->add_option("roots", roots, "Run directories to scan")->required();
  summarize->add_option("--out", summary_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (seeds.empty()) seeds.push_back(1);

    if (train->parsed()) {
      if (!checkpoint.empty()) {
        if (!config_path.empty()) throw ConfigError("--config and --checkpoint are exclusive");
        if (ov.baseline) throw ConfigError("cannot change the scheme of a resumed run");
        Trainer t = Trainer::resume(checkpoint, [&](ExperimentConfig& cfg) { ov.apply(cfg); });
        const EvalSummary e = train_to_directory(t, out, true, &std::cout);
        print_eval(out, e);
      } else {
        if (config_path.empty()) throw ConfigError("train needs --config or --checkpoint");
        ExperimentConfig cfg = ExperimentConfig::load(config_path);
        ov.apply(cfg);
        train_seeds(cfg, seeds, out);
      }
    } else if (baseline->parsed()) {
      ExperimentConfig cfg = ExperimentConfig::load(config_path);
      ov.apply(cfg);
      train_seeds(cfg, seeds, fs::path(out) / to_string(cfg.env.scheme));
    } else if (eval->parsed()) {
      const Trainer t = Trainer::resume(checkpoint, [&](ExperimentConfig& cfg) { ov.apply(cfg); });
      const EvalSummary e = write_evaluation(t, out);
      print_eval(out, e);
    } else if (summarize->parsed()) {
      std::vector<RunSummary> runs;
      for (const auto& r : roots) {
        auto found = collect_summaries(r);
        runs.insert(runs.end(), found.begin(), found.end());
      }
      if (runs.empty()) throw std::runtime_error("no summary.txt found");
      const auto rows = aggregate(runs);
      if (summary_out.empty()) {
        write_summary_csv(std::cout, rows);
      } else {
        auto f = open_output(summary_out);
        write_summary_csv(f, rows);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
