#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "linevio/core/plucker.hpp"
#include "linevio/lines/anchor_frame.hpp"

namespace linevio {

// Two-parameter line landmark: the anchor frame {P} pins the observation
// plane and the start-endpoint ray, leaving theta (direction in the plane)
// and rho (inverse distance to the start endpoint) free.
struct NonStructuralLine {
  int anchor_keyframe_id = -1;
  AnchorFrameP frame;
  double theta = 0.0;  // radians, in (-pi, pi]
  double rho = 0.2;    // 1/m, > 0
};

inline constexpr double kDefaultInverseDepthInit = 0.2;

// theta from the triangulated direction expressed in {P}; rho starts at the
// default inverse depth. The line direction must lie in the anchor plane.
inline std::optional<NonStructuralLine> init_nonstructural(
    const PluckerLine& line_c, const AnchorFrameP& frame, int anchor_kf_id,
    double rho0 = kDefaultInverseDepthInit) {
  const PluckerLine l = line_c.normalized();
  const Vec3 v_p = frame.R_P_C.transpose() * l.v;
  if (std::abs(v_p.z()) > 1e-6) return std::nullopt;
  NonStructuralLine out;
  out.anchor_keyframe_id = anchor_kf_id;
  out.frame = frame;
  out.theta = std::atan2(v_p.y(), v_p.x());
  out.rho = rho0;
  return out;
}

// Reconstructs (start endpoint, direction) in the anchor camera frame.
inline std::pair<Vec3, Vec3> nonstructural_to_camera_line(
    const NonStructuralLine& l) {
  const Vec3 v =
      l.frame.R_P_C * Vec3(std::cos(l.theta), std::sin(l.theta), 0.0);
  const Vec3 s = l.frame.y_axis() / l.rho;
  return {s, v};
}

}  // namespace linevio
