#pragma once

#include "linevio/core/types.hpp"

namespace linevio {

// Pinhole intrinsics. The estimator itself works on the normalized image
// plane; intrinsics are only used to convert pixel-space quantities (noise
// magnitudes, patch coordinates, clipping bounds) to and from normalized
// coordinates.
struct CameraModel {
  double fx = 460.0;
  double fy = 460.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  bool valid() const { return fx > 0.0 && fy > 0.0; }

  Vec2 to_pixel(const Vec3& xn) const {
    return Vec2(xn.x() / xn.z() * fx + cx, xn.y() / xn.z() * fy + cy);
  }

  Vec3 to_normalized(const Vec2& px) const {
    return Vec3((px.x() - cx) / fx, (px.y() - cy) / fy, 1.0);
  }

  // Pixel-space coefficients of a line given in normalized coordinates
  // (l_px = K^-T l_n, so l_px . p_px = 0 whenever l_n . x_n = 0).
  Vec3 line_to_pixel(const Vec3& ln) const {
    return Vec3(ln.x() / fx, ln.y() / fy,
                ln.z() - ln.x() * cx / fx - ln.y() * cy / fy);
  }
};

}  // namespace linevio
