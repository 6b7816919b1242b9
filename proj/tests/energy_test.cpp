#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "aris/energy.hpp"
#include "aris/numerics.hpp"

namespace aris {
namespace {

constexpr double pi = std::numbers::pi;

// Hand arithmetic from the reference constants: I0=0.3, U0=10, R0=0.4,
// Kv=380, Cm=8.891e-7. KE = 9.88/3800, KT = 9.55 KE.
constexpr double kKe = 0.0026;
constexpr double kKt = 0.02483;

TEST(MotorConstants, DerivedCoefficients) {
  const MotorConstants c;
  EXPECT_NEAR(c.back_emf_constant(), kKe, 1e-15);
  EXPECT_NEAR(c.torque_constant(), kKt, 1e-15);
  EXPECT_NEAR(c.c0(), 0.036, 1e-15);
  EXPECT_NEAR(c.c1(), 30 * kKe * 0.3 / pi, 1e-15);
  EXPECT_NEAR(c.c1(), 0.0074484513, 1e-10);
  EXPECT_NEAR(c.c2(), 8.5937978e-6, 1e-13);
  EXPECT_NEAR(c.c3(), 8.8903451e-7, 1e-14);
  EXPECT_NEAR(c.c4(), 5.1287056e-10, 1e-17);
}

TEST(MotorPower, ZeroSpeedIsCopperLoss) { EXPECT_NEAR(motor_power(0.0, {}), 0.036, 1e-15); }

TEST(MotorPower, Hover) { EXPECT_NEAR(motor_power(389.568497008403, {}), 68.6162279, 1e-6); }

TEST(MotorPower, NegativeSpeedThrows) { EXPECT_THROW(motor_power(-1.0, {}), std::domain_error); }

TEST(FlightPower, LevelFlight) {
  EXPECT_NEAR(flight_power({}, {}, {}), 274.4649116974264, 1e-9);
  EXPECT_NEAR(flight_power_closed_form({}, {}, {}), 274.4649116974264, 1e-9);
}

TEST(FlightPower, ClosedFormMatchesComposition) {
  RngStream rng(12);
  for (int t = 0; t < 1000; ++t) {
    const EulerAngles e{rng.uniform(-pi / 4, pi / 4), rng.uniform(-pi / 4, pi / 4), rng.uniform(0, 2 * pi)};
    const double a = flight_power(e, {}, {});
    const double b = flight_power_closed_form(e, {}, {});
    ASSERT_LT(std::abs(a - b), 1e-9 * std::abs(a));
  }
}

TEST(FlightPower, GrowsWithTilt) {
  double prev = 0.0;
  for (double th = 0.0; th < pi / 4; th += 0.05) {
    const double p = flight_power({0, th, 0}, {}, {});
    ASSERT_GT(p, prev);
    prev = p;
  }
  EXPECT_THROW(flight_power({pi / 2, 0, 0}, {}, {}), std::domain_error);
}

TEST(UpdateEnergy, Arithmetic) {
  EXPECT_DOUBLE_EQ(update_energy(9000, 274.5, 0.5), 8862.75);
  EXPECT_EQ(update_energy(9000, 0.0, 0.5), 9000.0);
  EXPECT_THROW(update_energy(9000, 1.0, 0.0), std::invalid_argument);
}

TEST(UpdateEnergy, SixtyLevelSlots) {
  double e = 9000.0;
  const double p = flight_power({}, {}, {});
  for (int i = 0; i < 60; ++i) e = update_energy(e, p, 0.5);
  EXPECT_NEAR(e, 766.05, 0.01);
}

TEST(MotorConstants, ValidateRejectsBadVoltage) {
  MotorConstants c;
  EXPECT_NO_THROW(c.validate());
  c.no_load_voltage = 0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace aris
