#pragma once

#include "linevio/core/types.hpp"

namespace linevio {

// Line segment observation on the normalized image plane. Endpoints are
// homogeneous [u, v, 1].
struct Segment2D {
  Vec3 s = Vec3(0, 0, 1);
  Vec3 e = Vec3(1, 0, 1);

  static Segment2D from_uv(const Vec2& su, const Vec2& eu) {
    return Segment2D{Vec3(su.x(), su.y(), 1.0), Vec3(eu.x(), eu.y(), 1.0)};
  }

  Vec2 s_uv() const { return s.head<2>(); }
  Vec2 e_uv() const { return e.head<2>(); }
  Vec2 midpoint_uv() const { return 0.5 * (s.head<2>() + e.head<2>()); }
  Vec2 direction_uv() const { return (e.head<2>() - s.head<2>()); }

  bool degenerate(double tol = 1e-12) const {
    return (e - s).norm() <= tol;
  }
};

// Finite 3D segment in a named frame, meters.
struct Segment3D {
  Vec3 s = Vec3::Zero();
  Vec3 e = Vec3::UnitX();

  Vec3 direction() const { return (e - s).normalized(); }
  double length() const { return (e - s).norm(); }
};

}  // namespace linevio
