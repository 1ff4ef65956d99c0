#pragma once

#include <cmath>

#include "linevio/core/types.hpp"

namespace linevio {

inline Mat3 skew(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

/// Rodrigues formula; falls back to the series expansion near zero.
inline Mat3 exp_so3(const Vec3& w) {
  const double angle = w.norm();
  const Mat3 W = skew(w);
  if (angle < 1e-8) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  const double s = std::sin(angle) / angle;
  const double c = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + s * W + c * W * W;
}

inline Vec3 log_so3(const Mat3& R) {
  const double cos_angle = std::min(1.0, std::max(-1.0, (R.trace() - 1.0) * 0.5));
  const double angle = std::acos(cos_angle);
  Vec3 axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (angle < 1e-8) {
    return 0.5 * axis;
  }
  if (angle > kPi - 1e-6) {
    // Near pi the off-diagonal difference vanishes; recover the axis from
    // the symmetric part instead.
    Mat3 S = 0.5 * (R + Mat3::Identity());
    Vec3 a(std::sqrt(std::max(0.0, S(0, 0))), std::sqrt(std::max(0.0, S(1, 1))),
           std::sqrt(std::max(0.0, S(2, 2))));
    int k = 0;
    if (a.y() > a.x()) k = 1;
    if (a.z() > a[k]) k = 2;
    if (a[k] < 1e-12) return Vec3::Zero();
    Vec3 axis_pi = a;
    if (k == 0) {
      axis_pi.y() = (a.x() < 1e-9) ? a.y() : S(0, 1) / a.x();
      axis_pi.z() = (a.x() < 1e-9) ? a.z() : S(0, 2) / a.x();
    } else if (k == 1) {
      axis_pi.x() = S(0, 1) / a.y();
      axis_pi.z() = S(1, 2) / a.y();
    } else {
      axis_pi.x() = S(0, 2) / a.z();
      axis_pi.y() = S(1, 2) / a.z();
    }
    return angle * axis_pi.normalized();
  }
  return (angle / (2.0 * std::sin(angle))) * axis;
}

inline Mat3 rot_z(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Mat3 m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return m;
}

inline Mat2 rot_2d(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 m;
  m << c, -s, s, c;
  return m;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Angle between two directions folded to [0, pi/2] (sign-insensitive).
inline double folded_angle(const Vec2& a, const Vec2& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-15 || nb < 1e-15) return 0.0;
  double c = std::abs(a.dot(b)) / (na * nb);
  c = std::min(1.0, c);
  return std::acos(c);
}

inline double folded_angle(const Vec3& a, const Vec3& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-15 || nb < 1e-15) return 0.0;
  double c = std::abs(a.dot(b)) / (na * nb);
  c = std::min(1.0, c);
  return std::acos(c);
}

}  // namespace linevio
