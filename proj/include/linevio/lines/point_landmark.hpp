#pragma once

#include "linevio/core/types.hpp"

namespace linevio {

// Inverse-depth point landmark along the anchor observation ray.
struct PointLandmark {
  int anchor_keyframe_id = -1;
  Vec3 z = Vec3(0, 0, 1);  // anchor observation, homogeneous [u, v, 1]
  double lambda = 0.2;     // inverse depth, 1/m, > 0
};

}  // namespace linevio
