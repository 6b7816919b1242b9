#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <array>
#include <vector>

#include "aris/agent.hpp"
#include "aris/config.hpp"
#include "aris/environment.hpp"
#include "aris/replay.hpp"

namespace aris {

enum class Algorithm { sac_per, sac_uniform, random_policy };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sac_per: return "sac-per";
    case Algorithm::sac_uniform: return "sac-uniform";
    case Algorithm::random_policy: return "random-policy";
  }
  return "sac-per";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::sac_per, Algorithm::sac_uniform, Algorithm::random_policy})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown algorithm '" + s + "' (expected sac-per|sac-uniform|random-policy)");
}

/// Training hyperparameters. In a config file these keys carry a `train.`,
/// `sac.` or `replay.` prefix; bare keys belong to the scenario.
struct TrainConfig {
  Algorithm algorithm = Algorithm::sac_per;
  std::size_t total_steps = 1000000;
  std::size_t warmup_steps = 5000;
  std::size_t updates_per_step = 1;
  std::size_t eval_interval = 0;  // episodes between evaluations; 0 disables
  std::size_t eval_episodes = 5;
  std::size_t checkpoint_interval = 0;  // episodes between checkpoints; 0: only at the end
  SacConfig sac;
  ReplayConfig replay;

  void validate() const {
    sac.validate();
    replay.validate();
    if (updates_per_step == 0) throw ConfigError("train.updates_per_step must be >= 1");
    if (eval_episodes == 0) throw ConfigError("train.eval_episodes must be >= 1");
  }

  static bool is_training_key(const std::string& key) {
    return key.starts_with("train.") || key.starts_with("sac.") || key.starts_with("replay.");
  }

  static TrainConfig from_kv(const KeyValueFile& kv) {
    TrainConfig c;
    c.algorithm = parse_algorithm(kv.get_string("train.algorithm", to_string(c.algorithm)));
    c.total_steps = kv.get_size("train.steps", c.total_steps);
    c.warmup_steps = kv.get_size("train.warmup_steps", c.warmup_steps);
    c.updates_per_step = kv.get_size("train.updates_per_step", c.updates_per_step);
    c.eval_interval = kv.get_size("train.eval_interval", c.eval_interval);
    c.eval_episodes = kv.get_size("train.eval_episodes", c.eval_episodes);
    c.checkpoint_interval = kv.get_size("train.checkpoint_interval", c.checkpoint_interval);
    c.sac.gamma = kv.get_double("sac.gamma", c.sac.gamma);
    c.sac.tau = kv.get_double("sac.tau", c.sac.tau);
    c.sac.actor_lr = kv.get_double("sac.actor_lr", c.sac.actor_lr);
    c.sac.critic_lr = kv.get_double("sac.critic_lr", c.sac.critic_lr);
    c.sac.alpha_lr = kv.get_double("sac.alpha_lr", c.sac.alpha_lr);
    c.sac.target_entropy = kv.get_double("sac.target_entropy", c.sac.target_entropy);
    c.sac.initial_alpha = kv.get_double("sac.initial_alpha", c.sac.initial_alpha);
    c.sac.log_std_min = kv.get_double("sac.log_std_min", c.sac.log_std_min);
    c.sac.log_std_max = kv.get_double("sac.log_std_max", c.sac.log_std_max);
    if (kv.contains("sac.hidden")) {
      c.sac.hidden.clear();
      std::stringstream ss(kv.raw("sac.hidden"));
      std::string item;
      while (std::getline(ss, item, ',')) {
        KeyValueFile one;
        one.set("h", KeyValueFile::trim(item));
        c.sac.hidden.push_back(one.get_size("h", 0));
      }
    }
    c.replay.capacity = kv.get_size("replay.capacity", c.replay.capacity);
    c.replay.batch_size = kv.get_size("replay.batch_size", c.replay.batch_size);
    c.replay.priority_exponent = kv.get_double("replay.priority_exponent", c.replay.priority_exponent);
    c.replay.weight_exponent_start = kv.get_double("replay.weight_exponent_start", c.replay.weight_exponent_start);
    c.replay.weight_exponent_end = kv.get_double("replay.weight_exponent_end", c.replay.weight_exponent_end);
    c.replay.anneal_steps = kv.get_size("replay.anneal_steps", kv.get_size("train.steps", c.replay.anneal_steps));
    c.replay.priority_floor = kv.get_double("replay.priority_floor", c.replay.priority_floor);
    KeyValueFile probe;
    c.to_kv(probe);
    for (const auto& key : kv.keys())
      if (!probe.contains(key)) throw ConfigError("unknown training key '" + key + "'");
    c.validate();
    return c;
  }

  void to_kv(KeyValueFile& kv) const {
    kv.set("train.algorithm", to_string(algorithm));
    kv.set("train.steps", total_steps);
    kv.set("train.warmup_steps", warmup_steps);
    kv.set("train.updates_per_step", updates_per_step);
    kv.set("train.eval_interval", eval_interval);
    kv.set("train.eval_episodes", eval_episodes);
    kv.set("train.checkpoint_interval", checkpoint_interval);
    kv.set("sac.gamma", sac.gamma);
    kv.set("sac.tau", sac.tau);
    kv.set("sac.actor_lr", sac.actor_lr);
    kv.set("sac.critic_lr", sac.critic_lr);
    kv.set("sac.alpha_lr", sac.alpha_lr);
    kv.set("sac.target_entropy", sac.target_entropy);
    kv.set("sac.initial_alpha", sac.initial_alpha);
    kv.set("sac.log_std_min", sac.log_std_min);
    kv.set("sac.log_std_max", sac.log_std_max);
    std::string hidden;
    for (std::size_t i = 0; i < sac.hidden.size(); ++i) hidden += (i ? ", " : "") + std::to_string(sac.hidden[i]);
    kv.set("sac.hidden", hidden);
    kv.set("replay.capacity", replay.capacity);
    kv.set("replay.batch_size", replay.batch_size);
    kv.set("replay.priority_exponent", replay.priority_exponent);
    kv.set("replay.weight_exponent_start", replay.weight_exponent_start);
    kv.set("replay.weight_exponent_end", replay.weight_exponent_end);
    kv.set("replay.anneal_steps", replay.anneal_steps);
    kv.set("replay.priority_floor", replay.priority_floor);
  }
};

/// Scenario plus training settings, as stored in one config file.
struct ExperimentConfig {
  EnvConfig env;
  TrainConfig train;

  static ExperimentConfig from_kv(const KeyValueFile& kv) {
    return {EnvConfig::from_kv(kv.filter([](const std::string& k) { return !TrainConfig::is_training_key(k); })),
            TrainConfig::from_kv(kv.filter(TrainConfig::is_training_key))};
  }
  static ExperimentConfig load(const std::string& path) { return from_kv(KeyValueFile::load(path)); }

  void to_kv(KeyValueFile& kv) const {
    env.to_kv(kv);
    train.to_kv(kv);
  }
};

struct EpisodeRecord {
  std::size_t episode = 0;  // 1-based
  std::size_t steps = 0;    // environment steps so far, all episodes
  std::size_t length = 0;
  double episode_return = 0.0;
  double sum_rate = 0.0;
  double energy_used = 0.0;
  int boundary = 0, speed = 0, accel = 0, separation = 0, energy = 0;
};

struct EvalSummary {
  std::size_t episodes = 0;
  double mean_sum_rate = 0.0;
  double std_sum_rate = 0.0;
  double mean_return = 0.0;
  double mean_energy_used = 0.0;
  std::vector<double> sum_rates;
};

inline const char* kMetricsHeader =
    "episode,steps,return,sum_rate,energy_used,length,boundary_violations,speed_violations,accel_violations,"
    "separation_violations,energy_violations";

inline std::string format_metrics_row(const EpisodeRecord& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.episode << ',' << r.steps << ',' << r.episode_return << ',' << r.sum_rate << ','
     << r.energy_used << ',' << r.length << ',' << r.boundary << ',' << r.speed << ',' << r.accel << ','
     << r.separation << ',' << r.energy;
  return os.str();
}

/// Reads a metrics CSV written with kMetricsHeader.
inline std::vector<EpisodeRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw std::runtime_error(path + ": unexpected header");
  std::vector<EpisodeRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 11) throw std::runtime_error(path + ": malformed row '" + line + "'");
    EpisodeRecord r;
    r.episode = std::stoull(f[0]);
    r.steps = std::stoull(f[1]);
    r.episode_return = std::stod(f[2]);
    r.sum_rate = std::stod(f[3]);
    r.energy_used = std::stod(f[4]);
    r.length = std::stoull(f[5]);
    r.boundary = std::stoi(f[6]);
    r.speed = std::stoi(f[7]);
    r.accel = std::stoi(f[8]);
    r.separation = std::stoi(f[9]);
    r.energy = std::stoi(f[10]);
    out.push_back(r);
  }
  return out;
}

/// One JSON object per slot.
inline nlohmann::json trajectory_record(std::size_t episode, const StepResult& r, const Environment& env) {
  nlohmann::json positions = nlohmann::json::array(), eulers = nlohmann::json::array(),
                 energy = nlohmann::json::array();
  for (const auto& s : env.states()) {
    positions.push_back({s.position.x, s.position.y, s.position.z});
    eulers.push_back({s.euler.roll, s.euler.pitch, s.euler.yaw});
    energy.push_back(s.energy_remaining);
  }
  return {{"episode", episode},       {"slot", r.info.slot},     {"position", positions},
          {"euler", eulers},          {"phases", r.info.phases}, {"rates", r.info.rates},
          {"sum_rate", r.info.slot_sum_rate}, {"reward", r.reward}, {"energy_remaining", energy}};
}

/// Algorithm 2 driver: collects experience, samples replay, updates the agent.
class Trainer {
 public:
  Trainer(ExperimentConfig cfg, std::uint64_t seed)
      : cfg_(std::move(cfg)), seed_(seed), env_(cfg_.env) {
    cfg_.train.validate();
    RngStream root(seed);
    episode_rng_ = root.derive(10);
    action_rng_ = root.derive(11);
    replay_rng_ = root.derive(12);
    update_rng_ = root.derive(13);
    RngStream init = root.derive(14);
    if (cfg_.train.algorithm != Algorithm::random_policy)
      agent_ = SacAgent(env_.observation_dim(), env_.action_dim(), cfg_.train.sac, init);
    make_replay();
  }

  const ExperimentConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t steps() const { return steps_; }
  std::size_t episodes() const { return episodes_; }
  std::size_t gradient_steps() const { return gradient_steps_; }
  const SacAgent& agent() const { return agent_; }
  SacAgent& agent() { return agent_; }
  const Replay& replay() const { return *replay_; }
  bool learns() const { return cfg_.train.algorithm != Algorithm::random_policy; }

  /// Observer of every gradient step, for ablation checks.
  std::function<void(const SacAgent::UpdateStats&)> on_update;

  /// Plays one training episode.
  EpisodeRecord run_episode() {
    EpisodeRecord rec;
    std::vector<double> obs = env_.reset(episode_rng_());
    const std::size_t batch = cfg_.train.replay.batch_size;
    while (!env_.terminal()) {
      std::vector<double> action;
      if (!learns() || steps_ < cfg_.train.warmup_steps) {
        action.resize(env_.action_dim());
        for (auto& a : action) a = action_rng_.uniform(-1.0, 1.0);
      } else {
        action = agent_.select_action(obs, true, action_rng_);
      }
      const StepResult r = env_.step_normalized(action);
      ++steps_;
      accumulate(rec, r);
      if (learns()) {
        replay_->push(obs, action, r.reward, r.observation, r.terminal);
        if (steps_ >= cfg_.train.warmup_steps && replay_->size() >= batch) {
          for (std::size_t u = 0; u < cfg_.train.updates_per_step; ++u) {
            const ReplayBatch b = replay_->sample(batch, replay_rng_, steps_);
            const auto st = agent_.update(b, update_rng_);
            replay_->update_priorities(b.indices, st.td_errors);
            ++gradient_steps_;
            if (on_update) on_update(st);
          }
        }
      }
      obs = r.observation;
    }
    ++episodes_;
    rec.episode = episodes_;
    rec.steps = steps_;
    finish(rec, env_);
    return rec;
  }

  /// Runs whole episodes until at least `total_steps` environment steps.
  void run(std::size_t total_steps, const std::function<void(const EpisodeRecord&)>& on_episode = {}) {
    while (steps_ < total_steps) {
      const EpisodeRecord rec = run_episode();
      if (on_episode) on_episode(rec);
    }
  }

  /// Rollouts on fixed per-seed episodes: deterministic policy for learned
  /// agents, uniform actions for the random policy. Repeatable.
  EvalSummary evaluate(std::size_t episodes, std::ostream* trajectory = nullptr) const {
    Environment env(cfg_.env);
    RngStream random_actions = RngStream(seed_).derive(16);
    EvalSummary out;
    out.episodes = episodes;
    for (std::size_t e = 0; e < episodes; ++e) {
      std::vector<double> obs = env.reset(evaluation_seed(e));
      EpisodeRecord rec;
      while (!env.terminal()) {
        std::vector<double> action;
        if (learns()) {
          action = agent_.select_action(obs, false, random_actions);
        } else {
          action.resize(env.action_dim());
          for (auto& a : action) a = random_actions.uniform(-1.0, 1.0);
        }
        const StepResult r = env.step_normalized(action);
        accumulate(rec, r);
        if (trajectory) *trajectory << trajectory_record(e + 1, r, env).dump() << '\n';
        obs = r.observation;
      }
      finish(rec, env);
      out.sum_rates.push_back(rec.sum_rate);
      out.mean_sum_rate += rec.sum_rate;
      out.mean_return += rec.episode_return;
      out.mean_energy_used += rec.energy_used;
    }
    const double n = static_cast<double>(episodes);
    out.mean_sum_rate /= n;
    out.mean_return /= n;
    out.mean_energy_used /= n;
    if (episodes > 1) {
      double ss = 0.0;
      for (double x : out.sum_rates) ss += (x - out.mean_sum_rate) * (x - out.mean_sum_rate);
      out.std_sum_rate = std::sqrt(ss / (n - 1.0));
    }
    return out;
  }

  /// Evaluation episode seeds depend only on the training seed, so schemes
  /// trained on one seed are compared on the same channel draws.
  std::uint64_t evaluation_seed(std::size_t episode) const {
    return RngStream(seed_).derive(1000 + episode)();
  }

  /// Writes `<dir>/checkpoint.bin` (networks and optimizers) and
  /// `<dir>/manifest.txt` (resolved config, counters and RNG states).
  void save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    if (learns()) {
      std::ofstream bin(dir / "checkpoint.bin", std::ios::binary);
      if (!bin) throw std::runtime_error("cannot write " + (dir / "checkpoint.bin").string());
      agent_.save(bin);
    }
    KeyValueFile kv;
    cfg_.to_kv(kv);
    kv.set("run.seed", seed_);
    kv.set("run.steps", steps_);
    kv.set("run.episodes", episodes_);
    kv.set("run.gradient_steps", gradient_steps_);
    kv.set("run.rng.episode", encode(episode_rng_));
    kv.set("run.rng.action", encode(action_rng_));
    kv.set("run.rng.replay", encode(replay_rng_));
    kv.set("run.rng.update", encode(update_rng_));
    kv.save((dir / "manifest.txt").string());
  }

  /// Rebuilds a trainer from a checkpoint directory. The replay buffer is not
  /// part of the checkpoint and restarts empty. `edit` may adjust settings
  /// that leave the network shapes alone, such as the step budget or scheme.
  static Trainer resume(const std::filesystem::path& dir,
                        const std::function<void(ExperimentConfig&)>& edit = {}) {
    if (!std::filesystem::exists(dir / "manifest.txt"))
      throw std::runtime_error("no checkpoint manifest in " + dir.string());
    const KeyValueFile kv = KeyValueFile::load((dir / "manifest.txt").string());
    auto cfg = ExperimentConfig::from_kv(kv.filter([](const std::string& k) { return !k.starts_with("run."); }));
    if (edit) {
      edit(cfg);
      cfg.env.validate();
      cfg.train.validate();
    }
    Trainer t(cfg, kv.get_u64("run.seed", 0));
    t.steps_ = kv.get_size("run.steps", 0);
    t.episodes_ = kv.get_size("run.episodes", 0);
    t.gradient_steps_ = kv.get_size("run.gradient_steps", 0);
    decode(kv.raw("run.rng.episode"), t.episode_rng_);
    decode(kv.raw("run.rng.action"), t.action_rng_);
    decode(kv.raw("run.rng.replay"), t.replay_rng_);
    decode(kv.raw("run.rng.update"), t.update_rng_);
    if (t.learns()) {
      std::ifstream bin(dir / "checkpoint.bin", std::ios::binary);
      if (!bin) throw std::runtime_error("cannot open " + (dir / "checkpoint.bin").string());
      t.agent_.load(bin);
    }
    return t;
  }

 private:
  void make_replay() {
    const auto& rc = cfg_.train.replay;
    if (cfg_.train.algorithm == Algorithm::sac_uniform)
      replay_ = std::make_unique<UniformReplay>(rc.capacity, env_.observation_dim(), env_.action_dim());
    else
      replay_ = std::make_unique<PrioritizedReplay>(rc, env_.observation_dim(), env_.action_dim());
  }

  static void accumulate(EpisodeRecord& rec, const StepResult& r) {
    ++rec.length;
    rec.episode_return += r.reward;
    rec.sum_rate += r.info.slot_sum_rate;
    const auto& v = r.info.violations;
    rec.boundary += v.boundary;
    rec.speed += v.speed;
    rec.accel += v.accel;
    rec.separation += v.separation;
    rec.energy += v.energy_deficit < 0.0 ? 1 : 0;
  }

  static void finish(EpisodeRecord& rec, const Environment& env) {
    for (const auto& s : env.states()) rec.energy_used += env.config().max_flight_energy - s.energy_remaining;
  }

  static std::string encode(const RngStream& r) {
    std::ostringstream os;
    os << std::hex;
    for (std::size_t i = 0; i < 4; ++i) os << (i ? " " : "") << r.state()[i];
    return os.str();
  }

  static void decode(const std::string& text, RngStream& r) {
    std::istringstream is(text);
    std::array<std::uint64_t, 4> s{};
    for (auto& x : s)
      if (!(is >> std::hex >> x)) throw ConfigError("manifest: malformed RNG state '" + text + "'");
    r.set_state(s);
  }

  ExperimentConfig cfg_;
  std::uint64_t seed_;
  Environment env_;
  SacAgent agent_;
  std::unique_ptr<Replay> replay_;
  RngStream episode_rng_{0}, action_rng_{0}, replay_rng_{0}, update_rng_{0};
  std::size_t steps_ = 0, episodes_ = 0, gradient_steps_ = 0;
};

/// Mean and sample standard deviation of evaluation sum-rates, grouped by
/// scheme, algorithm and problem size.
struct RunSummary {
  std::string scheme, algorithm;
  std::size_t users = 0, bs_antennas = 0, ris_elements = 0;
  double max_bs_power = 0.0;
  std::uint64_t seed = 0;
  double final_sum_rate = 0.0;
};

inline void write_run_summary(const std::filesystem::path& path, const RunSummary& s, const EvalSummary& e) {
  KeyValueFile kv;
  kv.set("scheme", s.scheme);
  kv.set("algorithm", s.algorithm);
  kv.set("users", s.users);
  kv.set("bs_antennas", s.bs_antennas);
  kv.set("ris_elements", s.ris_elements);
  kv.set("max_bs_power", s.max_bs_power);
  kv.set("seed", s.seed);
  kv.set("eval_episodes", e.episodes);
  kv.set("mean_sum_rate", e.mean_sum_rate);
  kv.set("std_sum_rate", e.std_sum_rate);
  kv.set("mean_return", e.mean_return);
  kv.set("mean_energy_used", e.mean_energy_used);
  kv.save(path.string());
}

inline RunSummary read_run_summary(const std::filesystem::path& path) {
  const KeyValueFile kv = KeyValueFile::load(path.string());
  RunSummary s;
  s.scheme = kv.raw("scheme");
  s.algorithm = kv.raw("algorithm");
  s.users = kv.get_size("users", 0);
  s.bs_antennas = kv.get_size("bs_antennas", 0);
  s.ris_elements = kv.get_size("ris_elements", 0);
  s.max_bs_power = kv.get_double("max_bs_power", 0.0);
  s.seed = kv.get_u64("seed", 0);
  s.final_sum_rate = std::stod(kv.raw("mean_sum_rate"));
  return s;
}

struct SummaryRow {
  std::string scheme, algorithm;
  std::size_t users = 0, bs_antennas = 0, ris_elements = 0;
  double max_bs_power = 0.0;
  std::size_t runs = 0;
  double mean = 0.0, std = 0.0;
};

inline std::vector<SummaryRow> aggregate(const std::vector<RunSummary>& runs) {
  using Key = std::tuple<std::string, std::string, std::size_t, std::size_t, std::size_t, double>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : runs)
    groups[{r.scheme, r.algorithm, r.users, r.bs_antennas, r.ris_elements, r.max_bs_power}].push_back(r.final_sum_rate);
  std::vector<SummaryRow> out;
  for (const auto& [k, v] : groups) {
    SummaryRow row{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), std::get<5>(k),
                   v.size()};
    for (double x : v) row.mean += x;
    row.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean) * (x - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(row);
  }
  return out;
}

inline const char* kSummaryHeader = "scheme,algorithm,users,bs_antennas,ris_elements,max_bs_power,runs,mean_sum_rate,std_sum_rate";

inline std::string format_summary_row(const SummaryRow& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.scheme << ',' << r.algorithm << ',' << r.users << ',' << r.bs_antennas << ','
     << r.ris_elements << ',' << r.max_bs_power << ',' << r.runs << ',' << r.mean << ',' << r.std;
  return os.str();
}

}  // namespace aris
