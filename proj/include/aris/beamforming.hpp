#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "aris/channel.hpp"
#include "aris/numerics.hpp"

namespace aris {

struct ZfDirections {
  ComplexMatrix directions;    // V^H (V V^H)^-1, M x K
  std::vector<double> nu;      // diag of directions^H directions
};

struct WaterFillingResult {
  std::vector<double> powers;  // p_k
  double mu = 0.0;             // water level is 1/mu
  int iterations = 0;
};

struct BeamformingSolution {
  ComplexMatrix beams;          // W, M x K
  std::vector<double> powers;
  double water_level = 0.0;
  std::vector<double> rates;
};

struct WaterFillingOptions {
  double tolerance = 1e-6;  // absolute, on total power
  int max_iterations = 200;
};

/// Zero-forcing directions. Rows are normalized before the Gram solve, which
/// leaves the pseudo-inverse unchanged but keeps the Cholesky well scaled
/// when users see very different path losses.
inline ZfDirections zf_directions(const ComplexMatrix& v) {
  const std::size_t users = v.rows(), antennas = v.cols();
  if (users == 0) throw DimensionError("zf_directions: no users");
  if (users > antennas) throw DimensionError("zf_directions: more users than BS antennas");

  std::vector<double> scale(users, 1.0);
  ComplexMatrix vn = v;
  for (std::size_t k = 0; k < users; ++k) {
    double n2 = 0.0;
    for (std::size_t m = 0; m < antennas; ++m) n2 += std::norm(v(k, m));
    if (n2 > 0.0) scale[k] = 1.0 / std::sqrt(n2);
    for (std::size_t m = 0; m < antennas; ++m) vn(k, m) *= scale[k];
  }

  const ComplexMatrix vn_h = vn.adjoint();
  const ComplexMatrix gram_inv = hermitian_solve(cmat_mul(vn, vn_h), ComplexMatrix::identity(users));
  ComplexMatrix dirs = cmat_mul(vn_h, gram_inv);
  for (std::size_t m = 0; m < antennas; ++m)
    for (std::size_t k = 0; k < users; ++k) dirs(m, k) *= scale[k];

  ZfDirections out{std::move(dirs), std::vector<double>(users)};
  for (std::size_t k = 0; k < users; ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < antennas; ++m) s += std::norm(out.directions(m, k));
    out.nu[k] = s;
  }
  return out;
}

/// Total transmit power sum_k max(1/mu - nu_k sigma^2, 0) at normalization mu.
inline double water_filling_power(std::span<const double> nu, double noise_power, double mu) {
  double total = 0.0;
  const double level = 1.0 / mu;
  for (double n : nu) total += std::max(level - n * noise_power, 0.0);
  return total;
}

/// Water-filling over ZF-equivalent channels with bisection on mu. The
/// initial bracket comes from the users whose service factor exceeds the
/// threshold (all users when none does), then is widened until it encloses
/// the budget.
inline WaterFillingResult water_filling(std::span<const double> nu, double noise_power, double max_power,
                                        std::span<const double> service, double service_threshold,
                                        const WaterFillingOptions& opt = {}) {
  const std::size_t users = nu.size();
  if (users == 0) throw std::invalid_argument("water_filling: empty user set");
  if (service.size() != users) throw DimensionError("water_filling: one service factor per user required");
  if (!(noise_power > 0.0) || !(max_power > 0.0))
    throw std::invalid_argument("water_filling: noise power and budget must be positive");
  for (double n : nu)
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("water_filling: nu must be positive and finite");

  double nu_sum = 0.0;
  for (double n : nu) nu_sum += n;
  const double mu_init = static_cast<double>(users) / (max_power + noise_power * nu_sum);
  double mu_max = mu_init, mu_min = mu_init;

  const bool any_served =
      std::any_of(service.begin(), service.end(), [&](double s) { return s > service_threshold; });
  for (std::size_t k = 0; k < users; ++k) {
    if (any_served && !(service[k] > service_threshold)) continue;
    const double floor = nu[k] * noise_power;
    if (floor <= 1.0 / mu_max) mu_max = 1.0 / floor;
    if (floor > 1.0 / mu_min) mu_min = 1.0 / floor;
  }

  // power is non-increasing in mu: need P(mu_min) >= budget >= P(mu_max)
  if (mu_min > mu_max) std::swap(mu_min, mu_max);
  while (water_filling_power(nu, noise_power, mu_min) < max_power) mu_min *= 0.5;
  while (water_filling_power(nu, noise_power, mu_max) > max_power) mu_max *= 2.0;

  WaterFillingResult res;
  double mu = 0.5 * (mu_min + mu_max);
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    mu = 0.5 * (mu_min + mu_max);
    const double total = water_filling_power(nu, noise_power, mu);
    if (std::abs(total - max_power) < opt.tolerance) break;
    if (total > max_power)
      mu_min = mu;
    else
      mu_max = mu;
  }
  // Polish: with the active set fixed, the level solving the budget has a
  // closed form. Kept only when it reproduces the same active set.
  double active = 0.0, floor_sum = 0.0;
  for (double n : nu)
    if (1.0 / mu > n * noise_power) {
      active += 1.0;
      floor_sum += n * noise_power;
    }
  if (active > 0.0) {
    const double level = (max_power + floor_sum) / active;
    bool same = true;
    for (double n : nu) same = same && ((level > n * noise_power) == (1.0 / mu > n * noise_power));
    if (same) mu = 1.0 / level;
  }
  res.mu = mu;
  res.powers.resize(users);
  for (std::size_t k = 0; k < users; ++k)
    res.powers[k] = std::max(1.0 / mu - nu[k] * noise_power, 0.0) / nu[k];
  return res;
}

/// ZF directions scaled by the water-filled powers, W = V~ P^(1/2).
/// Users whose channel row is exactly zero cannot be served; they get zero
/// power and the rest are solved as a smaller problem.
inline BeamformingSolution solve_beamforming(const ComplexMatrix& v, double noise_power, double max_power,
                                             std::span<const double> service, double service_threshold,
                                             const WaterFillingOptions& opt = {}) {
  const std::size_t users = v.rows(), antennas = v.cols();
  if (service.size() != users) throw DimensionError("solve_beamforming: one service factor per user required");
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < users; ++k) {
    bool nonzero = false;
    for (std::size_t m = 0; m < antennas && !nonzero; ++m) nonzero = v(k, m) != cd{};
    if (nonzero) live.push_back(k);
  }

  BeamformingSolution sol;
  sol.beams = ComplexMatrix(antennas, users);
  sol.powers.assign(users, 0.0);
  if (!live.empty()) {
    ComplexMatrix sub(live.size(), antennas);
    std::vector<double> sub_service(live.size());
    for (std::size_t j = 0; j < live.size(); ++j) {
      for (std::size_t m = 0; m < antennas; ++m) sub(j, m) = v(live[j], m);
      sub_service[j] = service[live[j]];
    }
    const ZfDirections zf = zf_directions(sub);
    const WaterFillingResult wf = water_filling(zf.nu, noise_power, max_power, sub_service, service_threshold, opt);
    for (std::size_t j = 0; j < live.size(); ++j) {
      const double amp = std::sqrt(wf.powers[j]);
      for (std::size_t m = 0; m < antennas; ++m) sol.beams(m, live[j]) = zf.directions(m, j) * amp;
      sol.powers[live[j]] = wf.powers[j];
    }
    sol.water_level = 1.0 / wf.mu;
  }
  sol.rates = achievable_rate(v, sol.beams, noise_power);
  return sol;
}

}  // namespace aris
