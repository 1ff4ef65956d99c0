#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "linevio/core/plucker.hpp"
#include "linevio/core/pose.hpp"
#include "linevio/lines/manhattan.hpp"

namespace linevio {

// Structural line anchored to a start frame {S}: the Manhattan yaw and the
// camera position at first observation, both frozen at creation. The line is
// the point (theta, rho) where it pierces the parameter-space XY plane, with
// direction locked to the Manhattan axis.
struct StructuralLine {
  int start_keyframe_id = -1;
  ManhattanFrame manhattan;
  Vec3 p_s_w = Vec3::Zero();  // start-frame origin in world
  Axis axis = Axis::Z;
  double theta = 0.0;  // radians
  double rho = 1.0;    // 1/m, > 0

  Mat3 R_L_S() const { return axis_rotation(axis); }
};

// Initializes from a triangulated world line: transfers the parameter-space
// z=0 plane to world by the inverse-transpose rule, intersects the line with
// it, and maps the intersection back to {L}.
inline std::optional<StructuralLine> init_structural(
    const PluckerLine& line_w, const ManhattanFrame& manhattan,
    const Vec3& p_s_w, Axis axis, int start_kf_id,
    double axis_tolerance_deg = 10.0) {
  const PluckerLine l = line_w.normalized();
  const Mat3 Q = manhattan.R_S_W() * axis_rotation(axis);
  const Vec3 axis_dir_w = Q * Vec3::UnitZ();
  if (folded_angle(l.v, axis_dir_w) > deg2rad(axis_tolerance_deg)) {
    return std::nullopt;
  }
  // World plane from [0,0,1,0] in {L}: normal = axis direction, through the
  // start-frame origin.
  const double plane_offset = -p_s_w.dot(axis_dir_w);
  const Vec3 p0 = l.closest_point_to_origin();
  const double denom = axis_dir_w.dot(l.v);
  if (std::abs(denom) < 1e-12) return std::nullopt;  // parallel to the plane
  const double t = -(axis_dir_w.dot(p0) + plane_offset) / denom;
  const Vec3 intersection_w = p0 + t * l.v;
  const Vec3 lp = Q.transpose() * (intersection_w - p_s_w);
  const double r = std::hypot(lp.x(), lp.y());
  if (r < 1e-9) return std::nullopt;  // line meets the start-frame axis
  StructuralLine out;
  out.start_keyframe_id = start_kf_id;
  out.manhattan = manhattan;
  out.p_s_w = p_s_w;
  out.axis = axis;
  out.theta = std::atan2(lp.y(), lp.x());
  out.rho = 1.0 / r;
  return out;
}

// (point, direction) of the structural line in the target camera frame.
inline std::pair<Vec3, Vec3> structural_to_camera_line(
    const StructuralLine& l, const Pose& T_w_c) {
  const Mat3 R_c_w = T_w_c.R.transpose();
  const Vec3 p_c_w = -(R_c_w * T_w_c.p);
  const Mat3 Q = l.manhattan.R_S_W() * l.R_L_S();
  const Vec3 lp(std::cos(l.theta) / l.rho, std::sin(l.theta) / l.rho, 0.0);
  const Vec3 p_c = R_c_w * (Q * lp + l.p_s_w) + p_c_w;
  const Vec3 v_c = R_c_w * (Q * Vec3::UnitZ());
  return {p_c, v_c};
}

// World-frame infinite line implied by the current parameters.
inline PluckerLine structural_to_world_line(const StructuralLine& l) {
  const Mat3 Q = l.manhattan.R_S_W() * l.R_L_S();
  const Vec3 lp(std::cos(l.theta) / l.rho, std::sin(l.theta) / l.rho, 0.0);
  const Vec3 p_w = Q * lp + l.p_s_w;
  const Vec3 v_w = Q * Vec3::UnitZ();
  return plucker_from_point_direction(p_w, v_w);
}

}  // namespace linevio
