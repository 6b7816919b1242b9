#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aris/trainer.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace aris {

namespace fs = std::filesystem;

/// Output layout of one run directory:
///   metrics.csv        one row per training episode (kMetricsHeader)
///   eval.csv           one row per periodic evaluation (kEvalHeader)
///   checkpoint/        checkpoint.bin and manifest.txt
///   trajectory.jsonl   final evaluation rollouts, one JSON object per slot
///   summary.txt        final evaluation, key = value
inline const char* kEvalHeader = "episode,steps,mean_sum_rate,std_sum_rate,mean_return,mean_energy_used";

/// Keeps freed matrix buffers in the process heap. By default glibc maps
/// large blocks afresh on every allocation, and the page faults cost about
/// a third of a training run. Call once from main; a no-op elsewhere.
inline void retain_heap_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

inline std::ofstream open_output(const fs::path& path, bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline RunSummary run_summary_of(const Trainer& t) {
  const auto& env = t.config().env;
  RunSummary s;
  s.scheme = to_string(env.scheme);
  s.algorithm = to_string(t.config().train.algorithm);
  s.users = env.users;
  s.bs_antennas = env.dims.bs_antennas;
  s.ris_elements = env.dims.subsurfaces * env.dims.elements_per_sub;
  s.max_bs_power = env.max_bs_power;
  s.seed = t.seed();
  return s;
}

/// Evaluates `t` and writes trajectory.jsonl and summary.txt into `dir`.
inline EvalSummary write_evaluation(const Trainer& t, const fs::path& dir) {
  fs::create_directories(dir);
  auto traj = open_output(dir / "trajectory.jsonl");
  const EvalSummary e = t.evaluate(t.config().train.eval_episodes, &traj);
  if (!traj) throw std::runtime_error("write failed: " + (dir / "trajectory.jsonl").string());
  RunSummary s = run_summary_of(t);
  write_run_summary(dir / "summary.txt", s, e);
  return e;
}

/// Trains until `t.config().train.total_steps`, streaming metrics and
/// periodic evaluations into `dir`, then checkpoints and evaluates.
inline EvalSummary train_to_directory(Trainer& t, const fs::path& dir, bool append = false,
                                      std::ostream* log = nullptr) {
  fs::create_directories(dir);
  const bool fresh = !append || !fs::exists(dir / "metrics.csv");
  auto metrics = open_output(dir / "metrics.csv", !fresh);
  auto evals = open_output(dir / "eval.csv", !fresh);
  if (fresh) {
    metrics << kMetricsHeader << '\n';
    evals << kEvalHeader << '\n';
  }
  const auto& tc = t.config().train;
  t.run(tc.total_steps, [&](const EpisodeRecord& rec) {
    metrics << format_metrics_row(rec) << '\n';
    if (tc.eval_interval > 0 && rec.episode % tc.eval_interval == 0) {
      const EvalSummary e = t.evaluate(tc.eval_episodes);
      evals << std::setprecision(17) << rec.episode << ',' << rec.steps << ',' << e.mean_sum_rate << ','
            << e.std_sum_rate << ',' << e.mean_return << ',' << e.mean_energy_used << '\n';
      if (log) *log << "episode " << rec.episode << " steps " << rec.steps << " eval_sum_rate " << e.mean_sum_rate << '\n';
    }
    if (tc.checkpoint_interval > 0 && rec.episode % tc.checkpoint_interval == 0) t.save_checkpoint(dir / "checkpoint");
  });
  if (!metrics || !evals) throw std::runtime_error("write failed in " + dir.string());
  t.save_checkpoint(dir / "checkpoint");
  return write_evaluation(t, dir);
}

/// Reads every summary.txt below `root` (recursively).
inline std::vector<RunSummary> collect_summaries(const fs::path& root) {
  if (!fs::exists(root)) throw std::runtime_error("no such directory: " + root.string());
  std::vector<RunSummary> runs;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "summary.txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) runs.push_back(read_run_summary(f));
  return runs;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) out << format_summary_row(r) << '\n';
}

}  // namespace aris
