#pragma once

#include <cmath>
#include <optional>

#include "linevio/core/plane.hpp"
#include "linevio/core/pose.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/core/so3.hpp"
#include "linevio/core/types.hpp"

namespace linevio {

// Infinite 3D line in Plucker form: n is the moment (normal of the plane
// through the line and the frame origin), v the direction; n . v = 0.
// For any point p on the line, n = p x v.
struct PluckerLine {
  Vec3 n = Vec3::Zero();
  Vec3 v = Vec3::UnitX();

  // Canonical representative: ||v|| = 1 and the first component of v with
  // magnitude above 1e-12 is positive. n scales along.
  PluckerLine normalized() const {
    PluckerLine out = *this;
    const double nv = v.norm();
    if (nv > 0.0) {
      out.v /= nv;
      out.n /= nv;
    }
    for (int i = 0; i < 3; ++i) {
      if (std::abs(out.v[i]) > 1e-12) {
        if (out.v[i] < 0.0) {
          out.v = -out.v;
          out.n = -out.n;
        }
        break;
      }
    }
    return out;
  }

  double plucker_constraint() const { return n.dot(v); }

  // Point on the line closest to the frame origin (assumes ||v|| = 1).
  Vec3 closest_point_to_origin() const { return v.cross(n); }

  double distance_to_point(const Vec3& x) const {
    return (x - closest_point_to_origin()).cross(v).norm() / v.norm();
  }
};

inline PluckerLine plucker_from_point_direction(const Vec3& p, const Vec3& v) {
  return PluckerLine{p.cross(v), v}.normalized();
}

// Dual Plucker matrix construction: L* = pi1 pi2^T - pi2 pi1^T with
// [v]x in the upper-left block and n in the upper-right column.
inline std::optional<PluckerLine> plucker_from_planes(const Plane& p1,
                                                      const Plane& p2) {
  const Plane a = p1.normalized();
  const Plane b = p2.normalized();
  PluckerLine line;
  line.v = b.normal().cross(a.normal());
  line.n = b.offset() * a.normal() - a.offset() * b.normal();
  if (line.v.norm() < 1e-10) return std::nullopt;
  return line.normalized();
}

// Line known in frame a, expressed in frame b where x_b = T_b_a x_a.
inline PluckerLine transform_line(const Pose& T_b_a, const PluckerLine& la) {
  PluckerLine lb;
  lb.v = T_b_a.R * la.v;
  lb.n = T_b_a.R * la.n + T_b_a.p.cross(lb.v);
  return lb;
}

// Two-view triangulation: intersects the observation planes of the anchor and
// the other view. T_anchor_other maps other-camera coordinates into the
// anchor camera. Returns the line in the anchor camera frame.
inline std::optional<PluckerLine> triangulate_line(
    const Segment2D& obs_anchor, const Segment2D& obs_other,
    const Pose& T_anchor_other, double min_parallax_deg = 1.0) {
  if (T_anchor_other.p.norm() < 1e-12) return std::nullopt;
  const auto p1 = plane_from_segment(obs_anchor);
  const auto p2_other = plane_from_segment(obs_other);
  if (!p1 || !p2_other) return std::nullopt;
  const Plane p2 = transform_plane(T_anchor_other, *p2_other);
  const double parallax =
      folded_angle(p1->normal(), p2.normal());
  if (parallax < deg2rad(min_parallax_deg)) return std::nullopt;
  return plucker_from_planes(*p1, p2);
}

// Closest point on the line q0 + t*u to the ray c + s*w (both infinite).
inline std::optional<Vec3> closest_point_on_line_to_ray(const Vec3& q0,
                                                        const Vec3& u,
                                                        const Vec3& c,
                                                        const Vec3& w) {
  const double uu = u.dot(u), ww = w.dot(w), uw = u.dot(w);
  const double det = uu * ww - uw * uw;
  if (det <= 1e-16 * uu * ww) return std::nullopt;  // parallel
  const Vec3 d0 = q0 - c;
  const double t = (-d0.dot(u) * ww + uw * d0.dot(w)) / det;
  return q0 + t * u;
}

// Recovers finite endpoints on an infinite world line from a segment
// observation: each endpoint is the point on the line closest to the
// corresponding back-projected ray.
inline std::optional<Segment3D> trim_line(const PluckerLine& line_w,
                                          const Segment2D& obs,
                                          const Pose& T_w_c) {
  const PluckerLine l = line_w.normalized();
  const Vec3 q0 = l.closest_point_to_origin();
  const Vec3 c = T_w_c.p;
  const auto s = closest_point_on_line_to_ray(q0, l.v, c, T_w_c.R * obs.s);
  const auto e = closest_point_on_line_to_ray(q0, l.v, c, T_w_c.R * obs.e);
  if (!s || !e) return std::nullopt;
  return Segment3D{*s, *e};
}

// E = [t]x R for T_target_source (x_t = R x_s + t); then x_t^T E x_s = 0.
inline std::optional<Mat3> essential_matrix(const Pose& T_target_source) {
  if (T_target_source.p.norm() < 1e-12) return std::nullopt;
  return Mat3(skew(T_target_source.p) * T_target_source.R);
}

}  // namespace linevio
