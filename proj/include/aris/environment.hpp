#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "aris/beamforming.hpp"
#include "aris/channel.hpp"
#include "aris/config.hpp"
#include "aris/dynamics.hpp"
#include "aris/energy.hpp"
#include "aris/geometry.hpp"
#include "aris/numerics.hpp"

namespace aris {

inline constexpr std::size_t kObservationPerAris = 10;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Commanded change for one ARIS: attitude variation plus sub-surface phases.
struct ArisCommand {
  EulerAngles delta;
  std::vector<double> phases;
};

using Action = std::vector<ArisCommand>;

/// Constraint breaches detected in one slot. Counts are per ARIS (or per
/// pair for separation); energy_deficit is the sum of negative remaining
/// energies and is zero when every ARIS still has energy.
struct Violations {
  int boundary = 0;
  int speed = 0;
  int accel = 0;
  int separation = 0;
  double energy_deficit = 0.0;

  bool any() const { return boundary || speed || accel || separation || energy_deficit < 0.0; }
};

struct StepInfo {
  std::vector<double> rates;         // per GU
  double slot_sum_rate = 0.0;
  double bs_power = 0.0;             // trace(W^H W)
  std::vector<double> flight_power;  // per ARIS, W
  std::vector<double> phases;        // realized, concatenated over ARISs
  Violations violations;
  std::size_t slot = 0;              // 1-based index of the slot just played
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;
  StepInfo info;
};

/// Additive penalty composition over the breached constraints.
inline double compute_reward(double rate_sum, const Violations& v, std::size_t slot, std::size_t slots,
                             const RewardConfig& rc) {
  double r = rate_sum;
  r -= rc.boundary_penalty * v.boundary;
  r -= rc.speed_penalty * v.speed;
  r -= rc.accel_penalty * v.accel;
  r -= rc.separation_penalty * v.separation;
  if (slot < slots && v.energy_deficit < 0.0) r += rc.energy_weight * v.energy_deficit;
  return r;
}

/// Adds isotropic Gaussian noise with per-axis standard deviation `std_dev`.
inline Vec3 perturb_position(Vec3 q, double std_dev, RngStream& rng) {
  if (std_dev < 0.0) throw std::invalid_argument("perturb_position: negative standard deviation");
  if (std_dev == 0.0) return q;
  const double dx = rng.normal(), dy = rng.normal(), dz = rng.normal();
  return {q.x + std_dev * dx, q.y + std_dev * dy, q.z + std_dev * dz};
}

/// One flag per unordered pair (i < j, lexicographic); true when the pair is
/// closer than min_distance.
inline std::vector<bool> check_separation(std::span<const Vec3> positions, double min_distance) {
  std::vector<bool> flags;
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const Vec3 d = positions[i] - positions[j];
      flags.push_back(d.dot(d) < min_distance * min_distance);
    }
  return flags;
}

/// Episodic ARIS environment. Single owner; not thread-safe.
class Environment {
 public:
  explicit Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.gu_positions.empty()) {
      RngStream layout(cfg_.layout_seed);
      for (std::size_t k = 0; k < cfg_.users; ++k) {
        const double x = layout.uniform(cfg_.area_min.x, cfg_.area_max.x);
        const double y = layout.uniform(cfg_.area_min.y, cfg_.area_max.y);
        gus_.push_back({x, y, 0.0});
      }
    } else {
      gus_ = cfg_.gu_positions;
    }
  }

  const EnvConfig& config() const { return cfg_; }
  const std::vector<Vec3>& gu_positions() const { return gus_; }
  const std::vector<UavState>& states() const { return states_; }
  std::size_t slot() const { return slot_; }
  bool terminal() const { return terminal_; }

  std::size_t observation_dim() const { return kObservationPerAris * cfg_.aris_count; }
  std::size_t action_dim_per_aris() const { return 3 + cfg_.dims.subsurfaces; }
  std::size_t action_dim() const { return action_dim_per_aris() * cfg_.aris_count; }

  std::vector<double> reset(std::uint64_t seed) {
    RngStream root(seed);
    channel_rng_ = root.derive(1);
    phase_rng_ = root.derive(2);
    perturb_rng_ = root.derive(3);
    states_.assign(cfg_.aris_count, UavState{});
    for (std::size_t i = 0; i < cfg_.aris_count; ++i) {
      auto& s = states_[i];
      s.position = start_position(i);
      s.energy_remaining = cfg_.max_flight_energy;
    }
    cumulative_rate_ = 0.0;
    slot_ = 0;
    terminal_ = false;
    return observe();
  }

  /// Maps agent outputs in [-1, 1] onto the physical action box.
  Action decode(std::span<const double> normalized) const {
    if (normalized.size() != action_dim()) throw DimensionError("Environment::decode: wrong action dimension");
    Action a(cfg_.aris_count);
    const std::size_t per = action_dim_per_aris();
    for (std::size_t i = 0; i < cfg_.aris_count; ++i) {
      const double* u = normalized.data() + i * per;
      a[i].delta = {u[0] * cfg_.angles.roll_step_max, u[1] * cfg_.angles.pitch_step_max,
                    u[2] * cfg_.angles.yaw_step_max};
      a[i].phases.resize(cfg_.dims.subsurfaces);
      for (std::size_t n = 0; n < cfg_.dims.subsurfaces; ++n)
        a[i].phases[n] = std::numbers::pi * (1.0 + std::clamp(u[3 + n], -1.0, 1.0));
    }
    return a;
  }

  StepResult step_normalized(std::span<const double> normalized) { return step(decode(normalized)); }

  StepResult step(const Action& action) {
    if (terminal_) throw std::logic_error("Environment::step called on a terminal episode");
    validate_action(action);

    const double dt = cfg_.slot_length();
    const std::size_t n_aris = cfg_.aris_count;
    StepResult result;
    Violations& viol = result.info.violations;
    result.info.flight_power.resize(n_aris);

    for (std::size_t i = 0; i < n_aris; ++i) {
      UavState& s = states_[i];
      if (cfg_.scheme == Scheme::fixed_ris) {
        s.euler = {};
        s.velocity = {};
        s.position = start_position(i);
      } else {
        s.euler = apply_angle_variation(s.euler, action[i].delta, cfg_.angles);
        const PlanarVector acc = planar_acceleration(s.euler, s.velocity, cfg_.airframe);
        if (acc.norm() > cfg_.max_accel) ++viol.accel;
        s = step_kinematics(s, acc, dt);
        const double speed = s.velocity.norm();
        if (speed > cfg_.max_speed) {
          ++viol.speed;
          s.velocity.x *= cfg_.max_speed / speed;
          s.velocity.y *= cfg_.max_speed / speed;
        }
        if (clamp_to_area(s)) ++viol.boundary;
      }
      const double power = flight_power(s.euler, cfg_.airframe, cfg_.motor);
      result.info.flight_power[i] = power;
      s.energy_remaining = update_energy(s.energy_remaining, power, dt);
      if (s.energy_remaining < 0.0) viol.energy_deficit += s.energy_remaining;
    }

    if (n_aris > 1) {
      std::vector<Vec3> pos;
      for (const auto& s : states_) pos.push_back(s.position);
      for (bool f : check_separation(pos, cfg_.min_separation)) viol.separation += f ? 1 : 0;
    }

    evaluate_links(action, result.info);

    cumulative_rate_ += result.info.slot_sum_rate;
    for (auto& s : states_) s.cumulative_rate = cumulative_rate_;
    ++slot_;
    result.info.slot = slot_;
    result.reward = compute_reward(result.info.slot_sum_rate, viol, slot_, cfg_.slots, cfg_.reward);
    terminal_ = slot_ >= cfg_.slots || viol.energy_deficit < 0.0;
    result.terminal = terminal_;
    result.observation = observe();
    return result;
  }

  std::vector<double> observe() const {
    std::vector<double> obs;
    obs.reserve(observation_dim());
    const double side_x = cfg_.area_max.x - cfg_.area_min.x;
    const double side_y = cfg_.area_max.y - cfg_.area_min.y;
    const double rate_scale = 10.0 * static_cast<double>(cfg_.users * cfg_.slots);
    const bool hide_tilt = cfg_.scheme == Scheme::ignore_tilt;
    for (const auto& s : states_) {
      obs.push_back(hide_tilt ? 0.0 : s.euler.roll / std::numbers::pi);
      obs.push_back(hide_tilt ? 0.0 : s.euler.pitch / std::numbers::pi);
      obs.push_back(s.euler.yaw / std::numbers::pi);
      obs.push_back((s.position.x - cfg_.area_min.x) / side_x);
      obs.push_back((s.position.y - cfg_.area_min.y) / side_y);
      obs.push_back(s.position.z / cfg_.altitude);
      obs.push_back(s.velocity.x / cfg_.max_speed);
      obs.push_back(s.velocity.y / cfg_.max_speed);
      obs.push_back(s.cumulative_rate / rate_scale);
      obs.push_back(s.energy_remaining / cfg_.max_flight_energy);
    }
    return obs;
  }

 private:
  /// ARIS i starts i*d_min along the diagonal from the initial (or fixed) point.
  Vec3 start_position(std::size_t i) const {
    const Vec3 base = cfg_.scheme == Scheme::fixed_ris ? cfg_.fixed_position : cfg_.initial_position;
    const double offset = static_cast<double>(i) * cfg_.min_separation;
    return {std::min(base.x + offset, cfg_.area_max.x), std::min(base.y + offset, cfg_.area_max.y), cfg_.altitude};
  }

  void validate_action(const Action& action) const {
    if (action.size() != cfg_.aris_count) throw std::invalid_argument("Environment::step: one command per ARIS");
    constexpr double slack = 1e-9;
    for (const auto& c : action) {
      if (std::abs(c.delta.roll) > cfg_.angles.roll_step_max + slack ||
          std::abs(c.delta.pitch) > cfg_.angles.pitch_step_max + slack ||
          std::abs(c.delta.yaw) > cfg_.angles.yaw_step_max + slack)
        throw std::invalid_argument("Environment::step: attitude variation outside the allowed range");
      if (c.phases.size() != cfg_.dims.subsurfaces)
        throw std::invalid_argument("Environment::step: one phase per sub-surface required");
      for (double p : c.phases)
        if (!(p >= 0.0 && p <= kTwoPi)) throw std::invalid_argument("Environment::step: phase outside [0, 2pi]");
    }
  }

  /// Clamps the position into the flight area and zeroes the outward velocity
  /// component. Returns true when the ARIS had left the area.
  bool clamp_to_area(UavState& s) const {
    bool out = false;
    if (s.position.x < cfg_.area_min.x) { s.position.x = cfg_.area_min.x; s.velocity.x = std::max(s.velocity.x, 0.0); out = true; }
    if (s.position.x > cfg_.area_max.x) { s.position.x = cfg_.area_max.x; s.velocity.x = std::min(s.velocity.x, 0.0); out = true; }
    if (s.position.y < cfg_.area_min.y) { s.position.y = cfg_.area_min.y; s.velocity.y = std::max(s.velocity.y, 0.0); out = true; }
    if (s.position.y > cfg_.area_max.y) { s.position.y = cfg_.area_max.y; s.velocity.y = std::min(s.velocity.y, 0.0); out = true; }
    return out;
  }

  /// Samples channels, solves the BS beamforming and fills rates into `info`.
  void evaluate_links(const Action& action, StepInfo& info) {
    const std::size_t n_aris = cfg_.aris_count, users = cfg_.users;
    const auto& dims = cfg_.dims;
    const auto& rp = cfg_.rician;

    ChannelRealization realized, designed;
    std::vector<std::vector<ComplexMatrix>> gains_real(n_aris), gains_design(n_aris);
    std::vector<double> service(users, 0.0);

    for (std::size_t i = 0; i < n_aris; ++i) {
      const UavState& s = states_[i];
      const Vec3 q = perturb_position(s.position, cfg_.position_noise_std, perturb_rng_);
      const EulerAngles level{0.0, 0.0, s.euler.yaw};
      const EulerAngles true_orient = cfg_.scheme == Scheme::no_tilt ? level : s.euler;
      const EulerAngles design_orient = cfg_.scheme == Scheme::ignore_tilt ? level : true_orient;

      ReflectionState refl;
      refl.elements_per_sub = dims.elements_per_sub;
      if (cfg_.scheme == Scheme::random_phase) {
        for (std::size_t n = 0; n < dims.subsurfaces; ++n) refl.phases.push_back(phase_rng_.uniform(0.0, kTwoPi));
      } else {
        refl.phases = action[i].phases;
      }
      info.phases.insert(info.phases.end(), refl.phases.begin(), refl.phases.end());

      const ComplexMatrix scatter_bs = sample_complex_gaussian(channel_rng_, dims.bs_antennas, dims.ris_elements());
      std::vector<ComplexMatrix> scatter_gu;
      for (std::size_t k = 0; k < users; ++k)
        scatter_gu.push_back(sample_complex_gaussian(channel_rng_, dims.ris_elements(), 1));

      const double pl_bs = path_loss((q - cfg_.bs_position).norm(), rp.reference_gain, rp.bs_ris_exponent);
      const AngleOfView aov_bs = azimuth_elevation(cfg_.bs_position, q);

      auto build = [&](const EulerAngles& orient, ChannelRealization& ch, std::vector<ComplexMatrix>& gains,
                       bool record_service) {
        CascadeChannel cas;
        cas.bs_ris = rician_combine(pl_bs, rp.bs_ris_k_factor,
                                    los_bs_ris(cfg_.bs_position, q, orient, dims, rp.wavelength), scatter_bs);
        for (std::size_t k = 0; k < users; ++k) {
          const double pl = path_loss((gus_[k] - q).norm(), rp.reference_gain, rp.ris_gu_exponent);
          cas.ris_gu.push_back(
              rician_combine(pl, rp.ris_gu_k_factor, los_ris_gu(q, gus_[k], orient, dims, rp.wavelength),
                             scatter_gu[k]));
          const AngleOfView aov_gu = azimuth_elevation(gus_[k], q);
          gains.push_back(aris_gain(orient, aov_bs, aov_gu, refl, cfg_.gain));
          if (record_service) service[k] = std::max(service[k], service_factor(orient, aov_bs, aov_gu, cfg_.gain));
        }
        ch.cascades.push_back(std::move(cas));
      };
      // the beamformer (and its service gate) sees the designed channel
      const bool ignore_tilt = cfg_.scheme == Scheme::ignore_tilt;
      build(true_orient, realized, gains_real[i], !ignore_tilt);
      if (ignore_tilt) build(design_orient, designed, gains_design[i], true);
    }

    for (std::size_t k = 0; k < users; ++k)
      realized.direct.push_back(sample_direct_channel(channel_rng_, cfg_.bs_position, gus_[k], dims, rp));

    const ComplexMatrix v_real = effective_channel(realized, gains_real);
    ComplexMatrix v_design = v_real;
    if (cfg_.scheme == Scheme::ignore_tilt) {
      designed.direct = realized.direct;
      v_design = effective_channel(designed, gains_design);
    }

    const BeamformingSolution bf =
        solve_beamforming(v_design, cfg_.noise_power, cfg_.max_bs_power, service, cfg_.gain.service_threshold);
    info.rates = cfg_.scheme == Scheme::ignore_tilt ? achievable_rate(v_real, bf.beams, cfg_.noise_power) : bf.rates;
    info.slot_sum_rate = 0.0;
    for (double r : info.rates) info.slot_sum_rate += r;
    info.bs_power = 0.0;
    for (const auto& w : bf.beams.data()) info.bs_power += std::norm(w);
  }

  EnvConfig cfg_;
  std::vector<Vec3> gus_;
  std::vector<UavState> states_;
  RngStream channel_rng_{0}, phase_rng_{0}, perturb_rng_{0};
  double cumulative_rate_ = 0.0;
  std::size_t slot_ = 0;
  bool terminal_ = false;
};

}  // namespace aris
