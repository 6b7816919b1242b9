#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "aris/geometry.hpp"

namespace aris {

/// Quadrotor airframe constants. Defaults are the reference 3 kg platform.
struct AirframeParams {
  double mass = 3.0;                 // kg
  double gravity = 9.81;             // m/s^2
  double thrust_coefficient = 4.848e-5;  // N/(rad/s)^2
  double drag_x = 0.11;              // N/(m/s)^2
  double drag_y = 0.11;
  double drag_z = 0.2;
  double frame_size = 0.3;           // m

  void validate() const {
    if (!(mass > 0 && gravity > 0 && thrust_coefficient > 0 && drag_x > 0 && drag_y > 0 && drag_z > 0 &&
          frame_size > 0)) {
      throw std::invalid_argument("AirframeParams: all constants must be strictly positive");
    }
  }
};

struct PlanarVector {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const PlanarVector&, const PlanarVector&) = default;
};

/// Kinematic and bookkeeping state of one ARIS for one slot.
struct UavState {
  Vec3 position;
  PlanarVector velocity;
  EulerAngles euler;
  double energy_remaining = 0.0;  // J
  double cumulative_rate = 0.0;   // bits/s/Hz summed over GUs and past slots
};

namespace detail {
inline double tilt_cosine(const EulerAngles& e) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (std::abs(e.roll) >= half_pi || std::abs(e.pitch) >= half_pi) {
    throw std::domain_error("tilt of pi/2 or more leaves no vertical thrust component");
  }
  return std::cos(e.roll) * std::cos(e.pitch);
}
}  // namespace detail

/// Thrust that holds altitude at the given attitude: mg / (cos(roll) cos(pitch)).
inline double total_thrust(const EulerAngles& e, const AirframeParams& p) {
  return p.mass * p.gravity / detail::tilt_cosine(e);
}

/// Common angular velocity of the four rotors producing total_thrust.
inline double rotor_speed(const EulerAngles& e, const AirframeParams& p) {
  return std::sqrt(total_thrust(e, p) / (4.0 * p.thrust_coefficient));
}

/// Horizontal acceleration at fixed altitude. The thrust vector points along
/// the inward surface normal (third column of the rotation matrix); quadratic
/// drag opposes each velocity component.
inline PlanarVector planar_acceleration(const EulerAngles& e, PlanarVector v, const AirframeParams& p) {
  const double thrust_per_mass = total_thrust(e, p) / p.mass;
  const Vec3 up = rotation_matrix(e).column(2);
  return {thrust_per_mass * up.x - p.drag_x * v.x * std::abs(v.x) / p.mass,
          thrust_per_mass * up.y - p.drag_y * v.y * std::abs(v.y) / p.mass};
}

/// Constant-acceleration update over one slot of length dt. Altitude is untouched.
inline UavState step_kinematics(UavState s, PlanarVector a, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_kinematics: slot length must be positive");
  s.position.x += s.velocity.x * dt + 0.5 * a.x * dt * dt;
  s.position.y += s.velocity.y * dt + 0.5 * a.y * dt * dt;
  s.velocity.x += a.x * dt;
  s.velocity.y += a.y * dt;
  return s;
}

struct AngleLimits {
  double roll_max = std::numbers::pi / 4.0;
  double pitch_max = std::numbers::pi / 4.0;
  double roll_step_max = std::numbers::pi / 12.0;
  double pitch_step_max = std::numbers::pi / 12.0;
  double yaw_step_max = std::numbers::pi / 12.0;
};

/// Adds a commanded attitude change, saturating roll and pitch at their
/// safety margins and wrapping yaw into [0, 2pi).
inline EulerAngles apply_angle_variation(const EulerAngles& e, const EulerAngles& delta, const AngleLimits& lim) {
  return {std::clamp(e.roll + delta.roll, -lim.roll_max, lim.roll_max),
          std::clamp(e.pitch + delta.pitch, -lim.pitch_max, lim.pitch_max), wrap_two_pi(e.yaw + delta.yaw)};
}

}  // namespace aris
