#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aris/beamforming.hpp"
#include "oracles.hpp"

namespace aris {
namespace {

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

const std::vector<double> kAllServed(8, 1.0);

std::span<const double> served(std::size_t k) { return {kAllServed.data(), k}; }

TEST(ZfDirections, IdentityAndScaling) {
  const auto zi = zf_directions(ComplexMatrix::identity(3));
  EXPECT_LT(max_abs_diff(zi.directions, ComplexMatrix::identity(3)), 1e-10);
  for (double n : zi.nu) EXPECT_NEAR(n, 1.0, 1e-10);
  auto v2 = ComplexMatrix::identity(3);
  v2 *= cd{2.0};
  const auto z2 = zf_directions(v2);
  auto half = ComplexMatrix::identity(3);
  half *= cd{0.5};
  EXPECT_LT(max_abs_diff(z2.directions, half), 1e-10);
  for (double n : z2.nu) EXPECT_NEAR(n, 0.25, 1e-10);
}

TEST(ZfDirections, PseudoInverseIdentity) {
  RngStream rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto v = sample_complex_gaussian(rng, 3, 6);
    const auto z = zf_directions(v);
    EXPECT_LT(max_abs_diff(cmat_mul(v, z.directions), ComplexMatrix::identity(3)), 1e-9);
    for (double n : z.nu) EXPECT_GT(n, 0.0);
  }
}

TEST(ZfDirections, TooManyUsersThrows) { EXPECT_THROW(zf_directions(ComplexMatrix(3, 2)), DimensionError); }

TEST(WaterFilling, SymmetricSplit) {
  const std::vector<double> nu{1, 1};
  const auto r = water_filling(nu, 0.1, 2.0, served(2), 1e-4);
  EXPECT_NEAR(r.powers[0], 1.0, 1e-6);
  EXPECT_NEAR(r.powers[1], 1.0, 1e-6);
}

TEST(WaterFilling, WeakUserCutOff) {
  const std::vector<double> nu{1, 4};
  const auto r = water_filling(nu, 1.0, 1.0, served(2), 1e-4);
  EXPECT_NEAR(r.powers[0], 1.0, 1e-6);
  EXPECT_EQ(r.powers[1], 0.0);
  const auto g = oracle::grid_water_filling(nu, 1.0, 1.0);
  EXPECT_NEAR(g.powers[0], 1.0, 1e-6);
  EXPECT_EQ(g.powers[1], 0.0);
}

TEST(WaterFilling, VanishingBudget) {
  const std::vector<double> nu{1, 2, 3};
  const auto r = water_filling(nu, 1.0, 1e-9, served(3), 1e-4, {1e-12, 200});
  double total = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_LE(r.powers[k], 1e-8);
    total += r.powers[k] * nu[k];
  }
  EXPECT_NEAR(total, 1e-9, 1e-12);
}

TEST(WaterFilling, UnservedGateStillConverges) {
  const std::vector<double> nu{1, 4, 2};
  const std::vector<double> kappa{0.0, 0.0, 0.0};
  const std::vector<double> mixed{0.0, 5.0, 0.0};
  const auto a = water_filling(nu, 1.0, 3.0, kappa, 1e-4);
  const auto b = water_filling(nu, 1.0, 3.0, mixed, 1e-4);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.powers[k], b.powers[k], 1e-6);
  EXPECT_NEAR(water_filling_power(nu, 1.0, a.mu), 3.0, 1e-6);
}

TEST(WaterFilling, ErrorPaths) {
  const std::vector<double> empty;
  EXPECT_THROW(water_filling(empty, 1.0, 1.0, empty, 1e-4), std::invalid_argument);
  const std::vector<double> nu{1.0, 0.0};
  EXPECT_THROW(water_filling(nu, 1.0, 1.0, served(2), 1e-4), std::invalid_argument);
  const std::vector<double> ok{1.0};
  EXPECT_THROW(water_filling(ok, 0.0, 1.0, served(1), 1e-4), std::invalid_argument);
  EXPECT_THROW(water_filling(ok, 1.0, -1.0, served(1), 1e-4), std::invalid_argument);
  EXPECT_THROW(water_filling(ok, 1.0, 1.0, served(2), 1e-4), DimensionError);
}

TEST(WaterFilling, PairPerturbationDoesNotHelp) {
  RngStream rng(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> nu(4);
    for (auto& n : nu) n = rng.uniform(0.1, 3.0);
    const double sigma2 = 0.5, budget = 4.0;
    const auto r = water_filling(nu, sigma2, budget, served(4), 1e-4, {1e-12, 200});
    auto rate = [&](const std::vector<double>& p) {
      double s = 0.0;
      for (double x : p) s += std::log2(1.0 + x / sigma2);
      return s;
    };
    const double base = rate(r.powers);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        if (i == j || r.powers[i] <= 0.0 || r.powers[j] <= 0.0) continue;
        // move eps of transmit power from j to i
        const double eps = 1e-4;
        auto p = r.powers;
        p[i] += eps / nu[i];
        p[j] -= eps / nu[j];
        if (p[j] < 0.0) continue;
        ASSERT_LE(rate(p), base + 1e-12);
      }
  }
}

TEST(SolveBeamforming, IdentityChannel) {
  const auto s = solve_beamforming(ComplexMatrix::identity(2), 1.0, 2.0, served(2), 1e-4);
  EXPECT_NEAR(s.rates[0], 1.0, 1e-6);
  EXPECT_NEAR(s.rates[1], 1.0, 1e-6);
}

TEST(SolveBeamforming, BlockedUserGetsNothing) {
  RngStream rng(31);
  auto v = sample_complex_gaussian(rng, 3, 6);
  for (std::size_t m = 0; m < 6; ++m) v(2, m) *= 1e-7;
  const double sigma2 = 1e-2, budget = 1.0;
  const auto s = solve_beamforming(v, sigma2, budget, served(3), 1e-4);
  EXPECT_EQ(s.powers[2], 0.0);
  const auto z = zf_directions(v);
  const auto g = oracle::grid_water_filling({z.nu[0], z.nu[1]}, sigma2, budget);
  EXPECT_NEAR(s.powers[0], g.powers[0], 1e-6);
  EXPECT_NEAR(s.powers[1], g.powers[1], 1e-6);
}

TEST(SolveBeamforming, ZeroChannelRowIsDropped) {
  RngStream rng(37);
  auto v = sample_complex_gaussian(rng, 3, 4);
  for (std::size_t m = 0; m < 4; ++m) v(1, m) = 0.0;
  const double sigma2 = 1e-2, budget = 2.0;
  const auto s = solve_beamforming(v, sigma2, budget, served(3), 1e-4);
  EXPECT_EQ(s.powers[1], 0.0);
  EXPECT_EQ(s.rates[1], 0.0);
  for (std::size_t m = 0; m < 4; ++m) EXPECT_EQ(s.beams(m, 1), cd{});
  ComplexMatrix rest(2, 4);
  for (std::size_t m = 0; m < 4; ++m) {
    rest(0, m) = v(0, m);
    rest(1, m) = v(2, m);
  }
  const auto r = solve_beamforming(rest, sigma2, budget, served(2), 1e-4);
  EXPECT_NEAR(s.rates[0], r.rates[0], 1e-12);
  EXPECT_NEAR(s.rates[2], r.rates[1], 1e-12);
  const auto none = solve_beamforming(ComplexMatrix(2, 4), sigma2, budget, served(2), 1e-4);
  EXPECT_EQ(none.rates, (std::vector<double>{0.0, 0.0}));
}

TEST(SolveBeamforming, RandomInstancesMatchGridOracle) {
  RngStream rng(41);
  for (int t = 0; t < 5; ++t) {
    const auto v = sample_complex_gaussian(rng, 4, 8);
    const double sigma2 = 0.1, budget = 2.0;
    const auto s = solve_beamforming(v, sigma2, budget, served(4), 1e-4);
    const auto z = zf_directions(v);
    const auto g = oracle::grid_water_filling(z.nu, sigma2, budget);
    double rate = 0.0, power = 0.0;
    for (double r : s.rates) rate += r;
    for (const auto& w : s.beams.data()) power += std::norm(w);
    EXPECT_NEAR(rate, g.sum_rate, 1e-6);
    EXPECT_LE(power, budget + 1e-6);
    EXPECT_NEAR(power, budget, 1e-6);
    const auto vw = cmat_mul(v, s.beams);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(s.rates[k], std::log2(1.0 + s.powers[k] / sigma2), 1e-9);
      for (std::size_t j = 0; j < 4; ++j)
        if (j != k) { EXPECT_LT(std::norm(vw(k, j)) / (std::norm(vw(k, k)) + sigma2), 1e-12); }
    }
  }
}

TEST(SolveBeamforming, SumRateMonotoneInBudget) {
  RngStream rng(51);
  const auto v = sample_complex_gaussian(rng, 4, 8);
  double prev = -1.0;
  for (double p = 0.01; p < 50.0; p *= 1.5) {
    const auto s = solve_beamforming(v, 0.1, p, served(4), 1e-4);
    double r = 0.0;
    for (double x : s.rates) r += x;
    ASSERT_GE(r, prev - 1e-9);
    prev = r;
  }
}

}  // namespace
}  // namespace aris
