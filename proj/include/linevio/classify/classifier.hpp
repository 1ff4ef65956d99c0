#pragma once

#include <optional>
#include <vector>

#include "linevio/core/rng.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/core/types.hpp"
#include "linevio/lines/manhattan.hpp"

namespace linevio {

// Homogeneous point on the normalized image plane; third component zero means
// a point at infinity. Since the plane sits at unit focal distance, the
// homogeneous vector is also the 3D direction in the camera frame.
struct VanishingPoint {
  Vec3 v = Vec3(0, 0, 1);
};

struct ClassificationConfig {
  double a_th = deg2rad(2.0);       // angle consistency threshold
  double d_th = 0.02;               // incidence threshold, normalized plane
  double unclassified_fraction_trigger = 0.6;
  int ransac_iterations = 200;
  double ransac_inlier_threshold = deg2rad(2.0);
  double gravity_orthogonality_tol = deg2rad(5.0);
  int ransac_min_inliers = 4;
};

struct LineLabel {
  enum class Kind { Structural, NonStructural };
  Kind kind = Kind::NonStructural;
  int manhattan_id = -1;
  Axis axis = Axis::Z;

  bool structural() const { return kind == Kind::Structural; }
};

// Vanishing point of world-vertical lines: the gravity direction expressed in
// the camera frame. Depends on rotation only.
VanishingPoint vertical_vp(const Mat3& R_w_c, const Vec3& gravity_w);

struct VpConsistency {
  double a_err = 0.0;  // radians
  double d_err = 0.0;  // normalized incidence error
};

std::optional<VpConsistency> segment_vp_consistency(const Segment2D& seg,
                                                    const VanishingPoint& vp);

struct RansacVpResult {
  bool found = false;
  VanishingPoint vp_x, vp_y;
  Vec3 dir_x_cam = Vec3::UnitX();
  Vec3 dir_y_cam = Vec3::UnitY();
  int inliers = 0;
};

// RANSAC over pairwise intersections of the unclassified segments' lines,
// constrained orthogonal to gravity; the Y direction is completed from
// gravity and the recovered X.
RansacVpResult ransac_vp(const std::vector<Segment2D>& segments,
                         const VanishingPoint& v_z, const Vec3& gravity_cam,
                         const ClassificationConfig& config, Rng& rng);

struct ClassifyResult {
  std::vector<LineLabel> labels;
  int new_manhattan_id = -1;
};

// Z labels from the gravity vanishing point, X/Y against every registered
// Manhattan frame; if too many segments stay unclassified, RANSAC proposes a
// new frame. Registered frames are appended to `frames`.
ClassifyResult classify(const std::vector<Segment2D>& segments,
                        const Mat3& R_w_c, const Vec3& gravity_w,
                        std::vector<ManhattanFrame>& frames,
                        const ClassificationConfig& config, Rng& rng);

}  // namespace linevio
