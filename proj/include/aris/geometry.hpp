#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aris {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Roll (phi), pitch (theta), yaw (psi) in radians.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  friend bool operator==(const EulerAngles&, const EulerAngles&) = default;
};

/// Azimuth in (-pi, pi], elevation in [-pi/2, pi/2], measured from a source
/// towards the ARIS.
struct AngleOfView {
  double azimuth = 0.0;
  double elevation = 0.0;
};

struct Mat3 {
  std::array<std::array<double, 3>, 3> m{};

  double operator()(int r, int c) const { return m[r][c]; }
  double& operator()(int r, int c) { return m[r][c]; }

  Vec3 operator*(Vec3 v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) out.m[i][j] += m[i][k] * o.m[k][j];
    return out;
  }

  Mat3 transpose() const {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.m[i][j] = m[j][i];
    return out;
  }

  double determinant() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  Vec3 column(int c) const { return {m[0][c], m[1][c], m[2][c]}; }
};

// Elementary rotations. The pitch matrix turns about y and the roll matrix
// about x; their product below is R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 pitch_rotation(double pitch) {
  const double c = std::cos(pitch), s = std::sin(pitch);
  return Mat3{{{{c, 0.0, s}, {0.0, 1.0, 0.0}, {-s, 0.0, c}}}};
}

inline Mat3 roll_rotation(double roll) {
  const double c = std::cos(roll), s = std::sin(roll);
  return Mat3{{{{1.0, 0.0, 0.0}, {0.0, c, -s}, {0.0, s, c}}}};
}

inline Mat3 yaw_rotation(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return Mat3{{{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}}};
}

/// Body-to-global rotation.
inline Mat3 rotation_matrix(const EulerAngles& e) {
  return yaw_rotation(e.yaw) * pitch_rotation(e.pitch) * roll_rotation(e.roll);
}

/// Unit normal of the surface plane: R * (0, 0, -1).
inline Vec3 surface_normal(const EulerAngles& e) {
  const Vec3 c = rotation_matrix(e).column(2);
  return {-c.x, -c.y, -c.z};
}

inline AngleOfView azimuth_elevation(Vec3 source, Vec3 aris) {
  const Vec3 d = aris - source;
  const double dist = d.norm();
  if (!(dist > 0.0)) throw std::invalid_argument("azimuth_elevation: source and ARIS coincide");
  const double s = std::clamp(d.z / dist, -1.0, 1.0);
  AngleOfView a;
  a.elevation = std::asin(s);
  // atan2(0, 0) == 0, so a vertical ray gets azimuth 0
  a.azimuth = std::atan2(d.y, d.x);
  return a;
}

inline Vec3 direction_vector(const AngleOfView& a) {
  const double cb = std::cos(a.elevation);
  return {cb * std::cos(a.azimuth), cb * std::sin(a.azimuth), std::sin(a.elevation)};
}

/// Cosine between a ray arriving from `a` and the inward surface normal.
/// Positive means the source lies in the half-space the surface serves.
inline double incidence_cosine(const EulerAngles& e, const AngleOfView& a) {
  const Vec3 n = surface_normal(e);
  const Vec3 inward{-n.x, -n.y, -n.z};
  return std::clamp(inward.dot(direction_vector(a)), -1.0, 1.0);
}

inline double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

}  // namespace aris
