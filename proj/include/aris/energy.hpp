#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "aris/dynamics.hpp"

namespace aris {

/// Brushless motor constants and the derived power-polynomial coefficients.
/// Rotor speed enters the polynomial in rad/s; the 30/pi factors in c1 and c3
/// convert it to rpm for the back-EMF term.
struct MotorConstants {
  double no_load_current = 0.3;   // I0, A
  double no_load_voltage = 10.0;  // U0, V
  double resistance = 0.4;        // R0, ohm
  double kv = 380.0;              // rpm/V
  double torque_coefficient = 8.891e-7;  // Cm, N m/(rad/s)^2

  double back_emf_constant() const {
    return (no_load_voltage - no_load_current * resistance) / (kv * no_load_voltage);
  }
  double torque_constant() const { return 9.55 * back_emf_constant(); }

  double c0() const { return no_load_current * no_load_current * resistance; }
  double c1() const { return 30.0 * back_emf_constant() * no_load_current / std::numbers::pi; }
  double c2() const { return 2.0 * torque_coefficient * resistance * no_load_current / torque_constant(); }
  double c3() const {
    return 30.0 * torque_coefficient * back_emf_constant() / (std::numbers::pi * torque_constant());
  }
  double c4() const {
    const double kt = torque_constant();
    return torque_coefficient * torque_coefficient * resistance / (kt * kt);
  }

  void validate() const {
    if (!(no_load_current > 0 && no_load_voltage > 0 && resistance > 0 && kv > 0 && torque_coefficient > 0) ||
        !(back_emf_constant() > 0)) {
      throw std::invalid_argument("MotorConstants: constants must be positive and U0 > I0*R0");
    }
  }
};

/// Electrical power of one motor spinning at omega rad/s.
inline double motor_power(double omega, const MotorConstants& c) {
  if (omega < 0.0) throw std::domain_error("motor_power: negative rotor speed");
  return (((c.c4() * omega + c.c3()) * omega + c.c2()) * omega + c.c1()) * omega + c.c0();
}

/// Four motors at the altitude-holding rotor speed.
inline double flight_power(const EulerAngles& e, const AirframeParams& p, const MotorConstants& c) {
  return 4.0 * motor_power(rotor_speed(e, p), c);
}

/// The same quantity written directly in terms of x = mg / (Ct cos(roll) cos(pitch)).
inline double flight_power_closed_form(const EulerAngles& e, const AirframeParams& p, const MotorConstants& c) {
  const double x = p.mass * p.gravity / (p.thrust_coefficient * detail::tilt_cosine(e));
  return c.c4() / 4.0 * x * x + c.c3() / 2.0 * std::pow(x, 1.5) + c.c2() * x + 2.0 * c.c1() * std::sqrt(x) +
         4.0 * c.c0();
}

inline double update_energy(double remaining, double power, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("update_energy: slot length must be positive");
  return remaining - power * dt;
}

}  // namespace aris
