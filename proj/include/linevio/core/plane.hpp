#pragma once

#include <optional>

#include "linevio/core/pose.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/core/types.hpp"

namespace linevio {

// Homogeneous plane pi = [nx, ny, nz, d]; pi . [x; 1] = 0 for points on it.
struct Plane {
  Vec4 pi = Vec4(0, 0, 1, 0);

  Vec3 normal() const { return pi.head<3>(); }
  double offset() const { return pi(3); }

  Plane normalized() const {
    const double n = normal().norm();
    return Plane{pi / n};
  }
};

// Plane through the camera optical center and the two back-projected segment
// endpoints: normal = s x e, offset 0.
inline std::optional<Plane> plane_from_segment(const Segment2D& seg) {
  const Vec3 n = seg.s.cross(seg.e);
  if (n.norm() <= 1e-12) return std::nullopt;
  Plane plane;
  plane.pi << n, 0.0;
  return plane;
}

// Re-expresses a plane known in frame a in frame b, where x_b = T_b_a x_a.
inline Plane transform_plane(const Pose& T_b_a, const Plane& plane_a) {
  const Vec3 n_b = T_b_a.R * plane_a.normal();
  Plane out;
  out.pi << n_b, plane_a.offset() - T_b_a.p.dot(n_b);
  return out;
}

}  // namespace linevio
