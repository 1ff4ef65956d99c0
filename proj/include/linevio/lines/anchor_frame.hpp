#pragma once

#include <optional>

#include "linevio/core/segment.hpp"
#include "linevio/core/types.hpp"

namespace linevio {

// Local frame {P} attached to the anchor observation plane of a
// non-structural line. Columns of R_P_C are the x, y, z axes of {P}
// expressed in the anchor camera frame:
//   y = ray to the observed start endpoint, z = observation plane normal,
//   x = y cross z. Frozen once built.
struct AnchorFrameP {
  Mat3 R_P_C = Mat3::Identity();

  Vec3 x_axis() const { return R_P_C.col(0); }
  Vec3 y_axis() const { return R_P_C.col(1); }
  Vec3 z_axis() const { return R_P_C.col(2); }
};

inline std::optional<AnchorFrameP> build_anchor_frame(const Segment2D& obs) {
  Vec3 z = obs.s.cross(obs.e);
  if (z.norm() <= 1e-12) return std::nullopt;
  z.normalize();
  const Vec3 y = obs.s.normalized();
  const Vec3 x = y.cross(z);
  AnchorFrameP frame;
  frame.R_P_C.col(0) = x;
  frame.R_P_C.col(1) = y;
  frame.R_P_C.col(2) = z;
  return frame;
}

}  // namespace linevio
