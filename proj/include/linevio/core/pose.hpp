#pragma once

#include "linevio/core/so3.hpp"
#include "linevio/core/types.hpp"

namespace linevio {

// Rigid transform between two named frames. A Pose T_a_b maps coordinates in
// frame b to frame a: x_a = R * x_b + p. All estimator APIs pass camera poses
// as world-from-camera and say so in the parameter name.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  static Pose Identity() { return Pose{}; }

  Pose inverse() const { return Pose{R.transpose(), -(R.transpose() * p)}; }

  Pose operator*(const Pose& other) const {
    return Pose{R * other.R, R * other.p + p};
  }

  Vec3 operator*(const Vec3& x) const { return R * x + p; }

  // Local increment: rotation applied on the right, translation additive.
  // delta = [dp(3), dtheta(3)].
  Pose retract(const Vec6& delta) const {
    return Pose{R * exp_so3(delta.tail<3>()), p + delta.head<3>()};
  }

  bool rotation_is_orthonormal(double tol = 1e-9) const {
    return (R.transpose() * R - Mat3::Identity()).norm() <= tol &&
           R.determinant() > 0.0;
  }
};

}  // namespace linevio
