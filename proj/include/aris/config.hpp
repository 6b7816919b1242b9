#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aris/channel.hpp"
#include "aris/dynamics.hpp"
#include "aris/energy.hpp"
#include "aris/geometry.hpp"

namespace aris {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered `key = value` text document. `#` starts a comment; blank lines are
/// ignored; later keys override earlier ones.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& origin = "<stream>") {
    KeyValueFile kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      const std::string key = trim(line.substr(0, eq));
      if (key.empty() && eq == std::string::npos) continue;
      if (eq == std::string::npos || key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      kv.set(key, trim(line.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return parse(in, path);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    write(out);
    if (!out) throw ConfigError("write failed: " + path);
  }

  void write(std::ostream& out) const {
    for (const auto& key : order_) out << key << " = " << values_.at(key) << '\n';
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.contains(key)) order_.push_back(key);
    values_[key] = value;
  }
  void set(const std::string& key, double value) { set(key, format(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, Vec3 v) { set(key, format(v.x) + ", " + format(v.y) + ", " + format(v.z)); }

  bool contains(const std::string& key) const { return values_.contains(key); }
  const std::string& raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }
  const std::vector<std::string>& keys() const { return order_; }

  /// Entries whose key satisfies `keep`, in order.
  template <class Pred>
  KeyValueFile filter(Pred keep) const {
    KeyValueFile out;
    for (const auto& k : order_)
      if (keep(k)) out.set(k, values_.at(k));
    return out;
  }

  double get_double(const std::string& key, double fallback) const {
    return contains(key) ? to_double(key, raw(key)) : fallback;
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!contains(key)) return fallback;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(raw(key), &used);
      if (used != raw(key).size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + raw(key) + "'");
    }
  }
  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
  }
  bool get_bool(const std::string& key, bool fallback) const {
    if (!contains(key)) return fallback;
    const auto& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return contains(key) ? raw(key) : fallback;
  }
  Vec3 get_vec3(const std::string& key, Vec3 fallback) const {
    if (!contains(key)) return fallback;
    const auto parts = split(raw(key), ',');
    if (parts.size() != 3) throw ConfigError("key '" + key + "': expected 'x, y, z'");
    return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
  }
  /// Semicolon-separated list of `x, y, z` triples.
  std::vector<Vec3> get_vec3_list(const std::string& key) const {
    std::vector<Vec3> out;
    if (!contains(key) || raw(key).empty()) return out;
    for (const auto& item : split(raw(key), ';')) {
      const auto parts = split(item, ',');
      if (parts.size() != 3) throw ConfigError("key '" + key + "': expected 'x, y, z; x, y, z; ...'");
      out.push_back({to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])});
    }
    return out;
  }

  /// Shortest round-tripping decimal form.
  static std::string format(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    for (int prec = 6; prec <= 17; ++prec) {
      std::ostringstream os;
      os << std::setprecision(prec) << v;
      if (prec == 17 || std::stod(os.str()) == v) return os.str();
    }
    return {};
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
  }
  static double to_double(const std::string& key, const std::string& text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    }
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// How the surface orientation and phases are realized; the non-default
/// values are the comparison schemes.
enum class Scheme { proposed, fixed_ris, random_phase, no_tilt, ignore_tilt };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::fixed_ris: return "fixed-ris";
    case Scheme::random_phase: return "random-phase";
    case Scheme::no_tilt: return "no-tilt";
    case Scheme::ignore_tilt: return "ignore-tilt";
  }
  return "proposed";
}

inline Scheme parse_scheme(const std::string& s) {
  for (Scheme v : {Scheme::proposed, Scheme::fixed_ris, Scheme::random_phase, Scheme::no_tilt, Scheme::ignore_tilt})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown scheme '" + s + "' (expected proposed|fixed-ris|random-phase|no-tilt|ignore-tilt)");
}

struct RewardConfig {
  double boundary_penalty = 10.0;    // P1
  double speed_penalty = 10.0;       // P2
  double accel_penalty = 10.0;       // P3
  double separation_penalty = 10.0;  // P4
  double energy_weight = 0.01;       // omega, 1/J

  void validate() const {
    if (boundary_penalty < 0 || speed_penalty < 0 || accel_penalty < 0 || separation_penalty < 0 || energy_weight < 0)
      throw ConfigError("RewardConfig: penalties must be non-negative");
  }
};

/// Scenario description. Defaults reproduce the reference system parameters.
struct EnvConfig {
  ArrayDims dims{8, 4, 10};
  std::size_t users = 8;
  std::vector<Vec3> gu_positions;  // empty: drawn uniformly from layout_seed
  std::uint64_t layout_seed = 2019;
  double altitude = 100.0;
  Vec3 area_min{0.0, 0.0, 100.0};
  Vec3 area_max{150.0, 150.0, 100.0};
  Vec3 bs_position{100.0, 100.0, 10.0};
  Vec3 initial_position{20.0, 20.0, 100.0};
  Vec3 fixed_position{60.0, 60.0, 100.0};
  double duration = 30.0;
  std::size_t slots = 60;
  double max_speed = 15.0;
  double max_accel = 5.0;
  AngleLimits angles;
  double max_flight_energy = 9000.0;
  double max_bs_power = 20.0;  // W
  double noise_power = 1e-11;  // W
  RicianParams rician;
  GainModel gain;
  AirframeParams airframe;
  MotorConstants motor;
  RewardConfig reward;
  double position_noise_std = 0.0;  // epsilon_0, m
  std::size_t aris_count = 1;
  double min_separation = 10.0;
  Scheme scheme = Scheme::proposed;

  double slot_length() const { return duration / static_cast<double>(slots); }

  void validate() const {
    if (users == 0) throw ConfigError("users must be >= 1");
    if (users > dims.bs_antennas) throw ConfigError("users must not exceed BS antennas");
    if (dims.subsurfaces == 0 || dims.elements_per_sub == 0) throw ConfigError("ARIS must have elements");
    if (!gu_positions.empty() && gu_positions.size() != users)
      throw ConfigError("gu_positions count must equal users");
    if (slots == 0 || !(duration > 0.0)) throw ConfigError("duration and slots must be positive");
    if (!(area_max.x > area_min.x) || !(area_max.y > area_min.y)) throw ConfigError("area corners are inverted");
    auto inside = [&](Vec3 q) {
      return q.x >= area_min.x && q.x <= area_max.x && q.y >= area_min.y && q.y <= area_max.y;
    };
    if (!inside(initial_position)) throw ConfigError("initial position lies outside the flight area");
    if (!inside(fixed_position)) throw ConfigError("fixed position lies outside the flight area");
    if (!(max_speed > 0.0 && max_accel > 0.0)) throw ConfigError("speed and acceleration limits must be positive");
    if (!(max_flight_energy > 0.0 && max_bs_power > 0.0 && noise_power > 0.0))
      throw ConfigError("energy, BS power and noise power must be positive");
    if (!(angles.roll_max > 0 && angles.roll_max < std::numbers::pi / 2 && angles.pitch_max > 0 &&
          angles.pitch_max < std::numbers::pi / 2))
      throw ConfigError("roll/pitch margins must lie in (0, pi/2)");
    if (!(angles.roll_step_max > 0 && angles.pitch_step_max > 0 && angles.yaw_step_max > 0))
      throw ConfigError("angle variation limits must be positive");
    if (position_noise_std < 0.0) throw ConfigError("position noise must be non-negative");
    if (aris_count == 0) throw ConfigError("aris_count must be >= 1");
    if (!(min_separation >= 0.0)) throw ConfigError("min_separation must be non-negative");
    rician.validate();
    gain.validate();
    airframe.validate();
    motor.validate();
    reward.validate();
  }

  static EnvConfig from_kv(const KeyValueFile& kv) {
    EnvConfig c;
    c.dims.bs_antennas = kv.get_size("bs_antennas", c.dims.bs_antennas);
    c.dims.subsurfaces = kv.get_size("subsurfaces", c.dims.subsurfaces);
    c.dims.elements_per_sub = kv.get_size("elements_per_subsurface", c.dims.elements_per_sub);
    if (kv.contains("ris_elements")) {
      const auto n = kv.get_size("ris_elements", 0);
      if (c.dims.elements_per_sub == 0 || n % c.dims.elements_per_sub != 0)
        throw ConfigError("ris_elements must be a multiple of elements_per_subsurface");
      c.dims.subsurfaces = n / c.dims.elements_per_sub;
    }
    c.gu_positions = kv.get_vec3_list("gu_positions");
    c.users = kv.get_size("users", c.gu_positions.empty() ? c.users : c.gu_positions.size());
    c.layout_seed = kv.get_u64("layout_seed", c.layout_seed);
    c.altitude = kv.get_double("altitude", c.altitude);
    c.area_min = kv.get_vec3("area_min", {c.area_min.x, c.area_min.y, c.altitude});
    c.area_max = kv.get_vec3("area_max", {c.area_max.x, c.area_max.y, c.altitude});
    c.bs_position = kv.get_vec3("bs_position", c.bs_position);
    c.initial_position = kv.get_vec3("initial_position", {c.initial_position.x, c.initial_position.y, c.altitude});
    c.fixed_position = kv.get_vec3("fixed_position", {c.fixed_position.x, c.fixed_position.y, c.altitude});
    c.initial_position.z = c.altitude;
    c.fixed_position.z = c.altitude;
    c.duration = kv.get_double("duration", c.duration);
    c.slots = kv.get_size("slots", c.slots);
    c.max_speed = kv.get_double("max_speed", c.max_speed);
    c.max_accel = kv.get_double("max_accel", c.max_accel);
    c.angles.roll_max = kv.get_double("roll_max", c.angles.roll_max);
    c.angles.pitch_max = kv.get_double("pitch_max", c.angles.pitch_max);
    c.angles.roll_step_max = kv.get_double("roll_step_max", c.angles.roll_step_max);
    c.angles.pitch_step_max = kv.get_double("pitch_step_max", c.angles.pitch_step_max);
    c.angles.yaw_step_max = kv.get_double("yaw_step_max", c.angles.yaw_step_max);
    c.max_flight_energy = kv.get_double("max_flight_energy", c.max_flight_energy);
    c.max_bs_power = kv.get_double("max_bs_power", c.max_bs_power);
    c.noise_power = kv.get_double("noise_power", c.noise_power);
    c.rician.reference_gain = kv.get_double("reference_gain", c.rician.reference_gain);
    c.rician.bs_ris_exponent = kv.get_double("bs_ris_exponent", c.rician.bs_ris_exponent);
    c.rician.ris_gu_exponent = kv.get_double("ris_gu_exponent", c.rician.ris_gu_exponent);
    c.rician.bs_ris_k_factor = kv.get_double("bs_ris_k_factor", c.rician.bs_ris_k_factor);
    c.rician.ris_gu_k_factor = kv.get_double("ris_gu_k_factor", c.rician.ris_gu_k_factor);
    c.rician.direct_exponent = kv.get_double("direct_exponent", c.rician.direct_exponent);
    c.rician.direct_blocked = kv.get_bool("direct_blocked", c.rician.direct_blocked);
    c.rician.wavelength = kv.get_double("wavelength", c.rician.wavelength);
    c.gain.lambertian_exponent = kv.get_double("lambertian_exponent", c.gain.lambertian_exponent);
    c.gain.service_threshold = kv.get_double("service_threshold", c.gain.service_threshold);
    c.airframe.mass = kv.get_double("mass", c.airframe.mass);
    c.airframe.gravity = kv.get_double("gravity", c.airframe.gravity);
    c.airframe.thrust_coefficient = kv.get_double("thrust_coefficient", c.airframe.thrust_coefficient);
    c.airframe.drag_x = kv.get_double("drag_x", c.airframe.drag_x);
    c.airframe.drag_y = kv.get_double("drag_y", c.airframe.drag_y);
    c.airframe.drag_z = kv.get_double("drag_z", c.airframe.drag_z);
    c.airframe.frame_size = kv.get_double("frame_size", c.airframe.frame_size);
    c.motor.no_load_current = kv.get_double("no_load_current", c.motor.no_load_current);
    c.motor.no_load_voltage = kv.get_double("no_load_voltage", c.motor.no_load_voltage);
    c.motor.resistance = kv.get_double("motor_resistance", c.motor.resistance);
    c.motor.kv = kv.get_double("motor_kv", c.motor.kv);
    c.motor.torque_coefficient = kv.get_double("torque_coefficient", c.motor.torque_coefficient);
    c.reward.boundary_penalty = kv.get_double("boundary_penalty", c.reward.boundary_penalty);
    c.reward.speed_penalty = kv.get_double("speed_penalty", c.reward.speed_penalty);
    c.reward.accel_penalty = kv.get_double("accel_penalty", c.reward.accel_penalty);
    c.reward.separation_penalty = kv.get_double("separation_penalty", c.reward.separation_penalty);
    c.reward.energy_weight = kv.get_double("energy_weight", c.reward.energy_weight);
    c.position_noise_std = kv.get_double("position_noise_std", c.position_noise_std);
    c.aris_count = kv.get_size("aris_count", c.aris_count);
    c.min_separation = kv.get_double("min_separation", c.min_separation);
    c.scheme = parse_scheme(kv.get_string("scheme", to_string(c.scheme)));
    for (const auto& key : kv.keys())
      if (!known_key(key)) throw ConfigError("unknown scenario key '" + key + "'");
    c.validate();
    return c;
  }

  static EnvConfig load(const std::string& path) { return from_kv(KeyValueFile::load(path)); }

  void to_kv(KeyValueFile& kv) const {
    kv.set("bs_antennas", dims.bs_antennas);
    kv.set("subsurfaces", dims.subsurfaces);
    kv.set("elements_per_subsurface", dims.elements_per_sub);
    kv.set("users", users);
    if (!gu_positions.empty()) {
      std::string s;
      for (std::size_t i = 0; i < gu_positions.size(); ++i) {
        if (i) s += "; ";
        s += KeyValueFile::format(gu_positions[i].x) + ", " + KeyValueFile::format(gu_positions[i].y) + ", " +
             KeyValueFile::format(gu_positions[i].z);
      }
      kv.set("gu_positions", s);
    }
    kv.set("layout_seed", layout_seed);
    kv.set("altitude", altitude);
    kv.set("area_min", area_min);
    kv.set("area_max", area_max);
    kv.set("bs_position", bs_position);
    kv.set("initial_position", initial_position);
    kv.set("fixed_position", fixed_position);
    kv.set("duration", duration);
    kv.set("slots", slots);
    kv.set("max_speed", max_speed);
    kv.set("max_accel", max_accel);
    kv.set("roll_max", angles.roll_max);
    kv.set("pitch_max", angles.pitch_max);
    kv.set("roll_step_max", angles.roll_step_max);
    kv.set("pitch_step_max", angles.pitch_step_max);
    kv.set("yaw_step_max", angles.yaw_step_max);
    kv.set("max_flight_energy", max_flight_energy);
    kv.set("max_bs_power", max_bs_power);
    kv.set("noise_power", noise_power);
    kv.set("reference_gain", rician.reference_gain);
    kv.set("bs_ris_exponent", rician.bs_ris_exponent);
    kv.set("ris_gu_exponent", rician.ris_gu_exponent);
    kv.set("bs_ris_k_factor", rician.bs_ris_k_factor);
    kv.set("ris_gu_k_factor", rician.ris_gu_k_factor);
    kv.set("direct_exponent", rician.direct_exponent);
    kv.set("direct_blocked", rician.direct_blocked);
    kv.set("wavelength", rician.wavelength);
    kv.set("lambertian_exponent", gain.lambertian_exponent);
    kv.set("service_threshold", gain.service_threshold);
    kv.set("mass", airframe.mass);
    kv.set("gravity", airframe.gravity);
    kv.set("thrust_coefficient", airframe.thrust_coefficient);
    kv.set("drag_x", airframe.drag_x);
    kv.set("drag_y", airframe.drag_y);
    kv.set("drag_z", airframe.drag_z);
    kv.set("frame_size", airframe.frame_size);
    kv.set("no_load_current", motor.no_load_current);
    kv.set("no_load_voltage", motor.no_load_voltage);
    kv.set("motor_resistance", motor.resistance);
    kv.set("motor_kv", motor.kv);
    kv.set("torque_coefficient", motor.torque_coefficient);
    kv.set("boundary_penalty", reward.boundary_penalty);
    kv.set("speed_penalty", reward.speed_penalty);
    kv.set("accel_penalty", reward.accel_penalty);
    kv.set("separation_penalty", reward.separation_penalty);
    kv.set("energy_weight", reward.energy_weight);
    kv.set("position_noise_std", position_noise_std);
    kv.set("aris_count", aris_count);
    kv.set("min_separation", min_separation);
    kv.set("scheme", to_string(scheme));
  }

 private:
  static bool known_key(const std::string& key) {
    static const char* const keys[] = {
        "bs_antennas", "subsurfaces", "elements_per_subsurface", "ris_elements", "users", "gu_positions",
        "layout_seed", "altitude", "area_min", "area_max", "bs_position", "initial_position", "fixed_position",
        "duration", "slots", "max_speed", "max_accel", "roll_max", "pitch_max", "roll_step_max", "pitch_step_max",
        "yaw_step_max", "max_flight_energy", "max_bs_power", "noise_power", "reference_gain", "bs_ris_exponent",
        "ris_gu_exponent", "bs_ris_k_factor", "ris_gu_k_factor", "direct_exponent", "direct_blocked", "wavelength",
        "lambertian_exponent", "service_threshold", "mass", "gravity", "thrust_coefficient", "drag_x", "drag_y",
        "drag_z", "frame_size", "no_load_current", "no_load_voltage", "motor_resistance", "motor_kv",
        "torque_coefficient", "boundary_penalty", "speed_penalty", "accel_penalty", "separation_penalty",
        "energy_weight", "position_noise_std", "aris_count", "min_separation", "scheme"};
    for (const char* k : keys)
      if (key == k) return true;
    return false;
  }
};

}  // namespace aris
