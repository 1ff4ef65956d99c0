#pragma once

#include <cmath>

#include "linevio/core/plucker.hpp"
#include "linevio/core/so3.hpp"

namespace linevio {

// Four-parameter orthonormal representation of a Plucker line,
// L = (U, W) with U in SO(3), W in SO(2). Used as the optimization baseline.
struct OrthonormalLine {
  Mat3 U = Mat3::Identity();
  Mat2 W = Mat2::Identity();
};

inline OrthonormalLine orthonormal_from_plucker(const PluckerLine& line) {
  const double nn = line.n.norm();
  const double nv = line.v.norm();
  OrthonormalLine out;
  Vec3 u0;
  if (nn > 1e-12) {
    u0 = line.n / nn;
  } else {
    // Line through the origin: any unit vector orthogonal to v works.
    const Vec3 v = line.v / nv;
    const Vec3 seed = (std::abs(v.x()) <= 0.9) ? Vec3::UnitX() : Vec3::UnitY();
    u0 = (seed - seed.dot(v) * v).normalized();
  }
  const Vec3 u1 = line.v / nv;
  out.U.col(0) = u0;
  out.U.col(1) = u1;
  out.U.col(2) = u0.cross(u1);
  const double h = std::hypot(nn, nv);
  out.W << nn / h, -nv / h, nv / h, nn / h;
  return out;
}

inline PluckerLine orthonormal_to_plucker(const OrthonormalLine& o,
                                          double scale = 1.0) {
  PluckerLine line;
  line.n = scale * o.W(0, 0) * o.U.col(0);
  line.v = scale * o.W(1, 0) * o.U.col(1);
  return line;
}

// Right-multiplicative local update: U <- U Exp(delta[0:3]), W <- W R(delta[3]).
inline OrthonormalLine orthonormal_update(const OrthonormalLine& o,
                                          const Vec4& delta) {
  OrthonormalLine out;
  out.U = o.U * exp_so3(delta.head<3>());
  out.W = o.W * rot_2d(delta(3));
  return out;
}

}  // namespace linevio
