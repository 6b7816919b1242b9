#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "aris/geometry.hpp"
#include "aris/numerics.hpp"

namespace aris {

/// Large-scale and Rician parameters for the three links. Defaults: -30 dB at
/// 1 m, free-space exponents on the ARIS hops, K = 10 on both hops, and a
/// Rayleigh direct link with exponent 3.5.
struct RicianParams {
  double reference_gain = 1e-3;  // rho0, linear
  double bs_ris_exponent = 2.0;
  double ris_gu_exponent = 2.0;
  double bs_ris_k_factor = 10.0;  // linear; +inf gives a pure LoS hop
  double ris_gu_k_factor = 10.0;
  double direct_exponent = 3.5;
  bool direct_blocked = false;
  double wavelength = 0.1;  // m; only the common distance phase depends on it

  void validate() const {
    if (!(reference_gain > 0.0)) throw std::invalid_argument("RicianParams: reference gain must be positive");
    if (bs_ris_exponent < 2.0 || ris_gu_exponent < 2.0 || direct_exponent < 2.0)
      throw std::invalid_argument("RicianParams: path-loss exponents must be >= 2");
    if (bs_ris_k_factor < 0.0 || ris_gu_k_factor < 0.0)
      throw std::invalid_argument("RicianParams: Rician factors must be non-negative");
    if (!(wavelength > 0.0)) throw std::invalid_argument("RicianParams: wavelength must be positive");
  }
};

/// Exponential-Lambertian element pattern cos^z with matched directivity 2(z+1).
struct GainModel {
  double lambertian_exponent = 1.0;
  double service_threshold = 1e-4;  // kappa_min

  double max_directivity() const { return 2.0 * (lambertian_exponent + 1.0); }

  void validate() const {
    if (lambertian_exponent < 0.0) throw std::invalid_argument("GainModel: exponent must be non-negative");
    if (!(service_threshold > 0.0)) throw std::invalid_argument("GainModel: service threshold must be positive");
  }
};

/// BS uniform linear array along global x; the ARIS is a uniform planar
/// array in its local x-y plane with one row per sub-surface.
struct ArrayDims {
  std::size_t bs_antennas = 8;      // M
  std::size_t subsurfaces = 4;      // rows
  std::size_t elements_per_sub = 4; // columns

  std::size_t ris_elements() const { return subsurfaces * elements_per_sub; }
};

/// Sub-surface phases; element n takes the phase of sub-surface n / elements_per_sub.
struct ReflectionState {
  std::vector<double> phases;
  std::size_t elements_per_sub = 1;

  std::size_t element_count() const { return phases.size() * elements_per_sub; }

  /// Unit-modulus reflection coefficients for all N elements.
  std::vector<cd> coefficients() const {
    std::vector<cd> out;
    out.reserve(element_count());
    for (double p : phases) {
      const cd c = std::polar(1.0, p);
      for (std::size_t i = 0; i < elements_per_sub; ++i) out.push_back(c);
    }
    return out;
  }
};

/// Channels of one ARIS: bs_ris is M x N, ris_gu[k] is N x 1.
struct CascadeChannel {
  ComplexMatrix bs_ris;
  std::vector<ComplexMatrix> ris_gu;
};

/// All links of one slot; direct[k] is M x 1.
struct ChannelRealization {
  std::vector<CascadeChannel> cascades;
  std::vector<ComplexMatrix> direct;
};

inline double path_loss(double distance, double reference_gain, double exponent) {
  if (!(distance > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  return reference_gain / std::pow(distance, exponent);
}

namespace detail {

inline std::vector<cd> bs_steering(const ArrayDims& dims, Vec3 unit_dir) {
  std::vector<cd> a(dims.bs_antennas);
  for (std::size_t m = 0; m < dims.bs_antennas; ++m)
    a[m] = std::polar(1.0, -std::numbers::pi * static_cast<double>(m) * unit_dir.x);
  return a;
}

/// `local_dir` is the unit direction from the ARIS towards the node, in the ARIS frame.
inline std::vector<cd> ris_steering(const ArrayDims& dims, Vec3 local_dir) {
  std::vector<cd> a;
  a.reserve(dims.ris_elements());
  for (std::size_t r = 0; r < dims.subsurfaces; ++r)
    for (std::size_t c = 0; c < dims.elements_per_sub; ++c)
      a.push_back(std::polar(
          1.0, -std::numbers::pi * (static_cast<double>(c) * local_dir.x + static_cast<double>(r) * local_dir.y)));
  return a;
}

inline Vec3 unit(Vec3 v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::domain_error("channel geometry: coincident positions");
  return (1.0 / n) * v;
}

}  // namespace detail

/// Rank-one unit-modulus LoS matrix between the BS and the ARIS (M x N).
inline ComplexMatrix los_bs_ris(Vec3 bs, Vec3 aris, const EulerAngles& orientation, const ArrayDims& dims,
                                double wavelength) {
  const Vec3 bs_to_ris = detail::unit(aris - bs);
  const Vec3 ris_to_bs_local = rotation_matrix(orientation).transpose() * (-1.0 * bs_to_ris);
  const auto a_bs = detail::bs_steering(dims, bs_to_ris);
  const auto a_ris = detail::ris_steering(dims, ris_to_bs_local);
  const cd common = std::polar(1.0, -2.0 * std::numbers::pi * (aris - bs).norm() / wavelength);
  ComplexMatrix out(dims.bs_antennas, dims.ris_elements());
  for (std::size_t m = 0; m < out.rows(); ++m)
    for (std::size_t n = 0; n < out.cols(); ++n) out(m, n) = common * a_bs[m] * a_ris[n];
  return out;
}

/// Unit-modulus LoS vector between the ARIS and a ground node (N x 1).
inline ComplexMatrix los_ris_gu(Vec3 aris, Vec3 gu, const EulerAngles& orientation, const ArrayDims& dims,
                                double wavelength) {
  const Vec3 ris_to_gu_local = rotation_matrix(orientation).transpose() * detail::unit(gu - aris);
  const auto a_ris = detail::ris_steering(dims, ris_to_gu_local);
  const cd common = std::polar(1.0, -2.0 * std::numbers::pi * (gu - aris).norm() / wavelength);
  ComplexMatrix out(dims.ris_elements(), 1);
  for (std::size_t n = 0; n < out.rows(); ++n) out(n, 0) = common * a_ris[n];
  return out;
}

/// sqrt(gain) * (sqrt(K/(1+K)) los + sqrt(1/(1+K)) scatter).
inline ComplexMatrix rician_combine(double gain, double k_factor, const ComplexMatrix& los,
                                    const ComplexMatrix& scatter) {
  if (los.rows() != scatter.rows() || los.cols() != scatter.cols())
    throw DimensionError("rician_combine: LoS and scatter shapes differ");
  double w_los = 1.0, w_scatter = 0.0;
  if (!std::isinf(k_factor)) {
    w_los = std::sqrt(k_factor / (1.0 + k_factor));
    w_scatter = std::sqrt(1.0 / (1.0 + k_factor));
  }
  const double amp = std::sqrt(gain);
  ComplexMatrix out(los.rows(), los.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = amp * (w_los * los.data()[i] + w_scatter * scatter.data()[i]);
  return out;
}

inline ComplexMatrix sample_bs_ris_channel(RngStream& rng, Vec3 bs, Vec3 aris, const EulerAngles& orientation,
                                           const ArrayDims& dims, const RicianParams& p) {
  const auto scatter = sample_complex_gaussian(rng, dims.bs_antennas, dims.ris_elements());
  return rician_combine(path_loss((aris - bs).norm(), p.reference_gain, p.bs_ris_exponent), p.bs_ris_k_factor,
                        los_bs_ris(bs, aris, orientation, dims, p.wavelength), scatter);
}

inline ComplexMatrix sample_ris_gu_channel(RngStream& rng, Vec3 aris, Vec3 gu, const EulerAngles& orientation,
                                           const ArrayDims& dims, const RicianParams& p) {
  const auto scatter = sample_complex_gaussian(rng, dims.ris_elements(), 1);
  return rician_combine(path_loss((gu - aris).norm(), p.reference_gain, p.ris_gu_exponent), p.ris_gu_k_factor,
                        los_ris_gu(aris, gu, orientation, dims, p.wavelength), scatter);
}

/// Rayleigh BS -> GU link, or all zeros when the direct path is blocked.
inline ComplexMatrix sample_direct_channel(RngStream& rng, Vec3 bs, Vec3 gu, const ArrayDims& dims,
                                           const RicianParams& p) {
  if (p.direct_blocked) return ComplexMatrix(dims.bs_antennas, 1);
  auto h = sample_complex_gaussian(rng, dims.bs_antennas, 1);
  h *= std::sqrt(path_loss((gu - bs).norm(), p.reference_gain, p.direct_exponent));
  return h;
}

/// Normalized power pattern: cos^z of the off-boresight angle in the front
/// hemisphere, zero behind the surface.
inline double radiation_pattern(double /*azimuth*/, double off_boresight, const GainModel& g) {
  const double c = std::cos(off_boresight);
  if (!(c > 1e-15)) return 0.0;
  return std::pow(c, g.lambertian_exponent);
}

inline double service_factor_from_cosines(double cos_bs, double cos_gu, const GainModel& g) {
  if (!(cos_bs > 0.0) || !(cos_gu > 0.0)) return 0.0;
  const double dm = g.max_directivity();
  return dm * dm * std::pow(std::abs(cos_bs * cos_gu), g.lambertian_exponent);
}

/// Scalar tilt-dependent gain D_m^2 |cos(g_BS) cos(g_k)|^z, zero outside the served half-space.
inline double service_factor(const EulerAngles& e, const AngleOfView& aov_bs, const AngleOfView& aov_gu,
                             const GainModel& g) {
  return service_factor_from_cosines(incidence_cosine(e, aov_bs), incidence_cosine(e, aov_gu), g);
}

/// N x N diagonal gain: service factor times the reflection coefficients.
inline ComplexMatrix aris_gain(const EulerAngles& e, const AngleOfView& aov_bs, const AngleOfView& aov_gu,
                               const ReflectionState& refl, const GainModel& g) {
  const double kappa = service_factor(e, aov_bs, aov_gu, g);
  const auto coeffs = refl.coefficients();
  ComplexMatrix out(coeffs.size(), coeffs.size());
  if (kappa == 0.0) return out;
  for (std::size_t n = 0; n < coeffs.size(); ++n) out(n, n) = kappa * coeffs[n];
  return out;
}

/// Rows v_k = sum_i h_{i,k}^H xi_{i,k} H_i^T + h_{d,k}^H, a K x M matrix.
/// gains[i][k] is the N x N diagonal gain of ARIS i towards GU k.
inline ComplexMatrix effective_channel(const ChannelRealization& ch,
                                       const std::vector<std::vector<ComplexMatrix>>& gains) {
  const std::size_t users = ch.direct.size();
  if (users == 0) throw DimensionError("effective_channel: no users");
  const std::size_t antennas = ch.direct.front().rows();
  if (gains.size() != ch.cascades.size()) throw DimensionError("effective_channel: one gain set per ARIS required");

  ComplexMatrix v(users, antennas);
  for (std::size_t k = 0; k < users; ++k) {
    if (ch.direct[k].rows() != antennas || ch.direct[k].cols() != 1)
      throw DimensionError("effective_channel: direct channel must be M x 1");
    for (std::size_t m = 0; m < antennas; ++m) v(k, m) = std::conj(ch.direct[k](m, 0));
  }

  for (std::size_t i = 0; i < ch.cascades.size(); ++i) {
    const auto& cas = ch.cascades[i];
    const std::size_t n_el = cas.bs_ris.cols();
    if (cas.bs_ris.rows() != antennas) throw DimensionError("effective_channel: BS-ARIS matrix must be M x N");
    if (cas.ris_gu.size() != users || gains[i].size() != users)
      throw DimensionError("effective_channel: one ARIS-GU channel and gain per user required");
    for (std::size_t k = 0; k < users; ++k) {
      const auto& h = cas.ris_gu[k];
      const auto& xi = gains[i][k];
      if (h.rows() != n_el || h.cols() != 1 || xi.rows() != n_el || xi.cols() != n_el)
        throw DimensionError("effective_channel: ARIS-GU channel or gain has the wrong shape");
      for (std::size_t n = 0; n < n_el; ++n) {
        const cd coef = std::conj(h(n, 0)) * xi(n, n);
        if (coef == cd{}) continue;
        for (std::size_t m = 0; m < antennas; ++m) v(k, m) += coef * cas.bs_ris(m, n);
      }
    }
  }
  return v;
}

inline ComplexMatrix effective_channel(const ChannelRealization& ch, const std::vector<ComplexMatrix>& gains) {
  return effective_channel(ch, std::vector<std::vector<ComplexMatrix>>{gains});
}

/// Per-GU rate log2(1 + SINR) for channel rows V (K x M) and beams W (M x K).
inline std::vector<double> achievable_rate(const ComplexMatrix& v, const ComplexMatrix& w, double noise_power) {
  if (!(noise_power > 0.0)) throw std::invalid_argument("achievable_rate: noise power must be positive");
  if (v.cols() != w.rows() || v.rows() != w.cols()) throw DimensionError("achievable_rate: V and W do not conform");
  const ComplexMatrix vw = cmat_mul(v, w);
  std::vector<double> rates(v.rows());
  for (std::size_t k = 0; k < v.rows(); ++k) {
    double interference = 0.0;
    for (std::size_t j = 0; j < v.rows(); ++j)
      if (j != k) interference += std::norm(vw(k, j));
    rates[k] = std::log2(1.0 + std::norm(vw(k, k)) / (interference + noise_power));
  }
  return rates;
}

/// Sum over slots and users.
inline double sum_rate(const std::vector<std::vector<double>>& rates_per_slot) {
  double total = 0.0;
  for (const auto& slot : rates_per_slot)
    for (double r : slot) total += r;
  return total;
}

}  // namespace aris
