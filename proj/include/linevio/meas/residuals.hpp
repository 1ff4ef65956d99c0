#pragma once

#include <optional>

#include "linevio/core/plucker.hpp"
#include "linevio/core/pose.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/lines/nonstructural.hpp"
#include "linevio/lines/orthonormal.hpp"
#include "linevio/lines/point_landmark.hpp"
#include "linevio/lines/structural.hpp"

namespace linevio {

// All residuals are unwhitened; the solver applies sqrt-information and the
// robust weight. Pose Jacobian columns are the local increment
// [dp(3), dtheta(3)] with the rotation perturbation applied on the right.

// Projected line equation l = [p]x v on the normalized image plane.
std::optional<Vec3> line_equation(const Vec3& p, const Vec3& v);

// Signed distance from homogeneous point x = [u, v, 1] to image line l.
std::optional<double> endpoint_line_distance(const Vec3& x, const Vec3& l);

struct PointJacobians {
  Vec2 d_lambda = Vec2::Zero();
  Mat26 d_anchor_pose = Mat26::Zero();
  Mat26 d_target_pose = Mat26::Zero();
};

// Reprojection error of an inverse-depth point into the target camera.
// Poses are world-from-camera. obs is the target-frame observation (u, v).
std::optional<Vec2> point_residual(const PointLandmark& lm,
                                   const Pose& T_w_anchor,
                                   const Pose& T_w_target, const Vec2& obs,
                                   PointJacobians* jac = nullptr);

struct NonStructuralJacobians {
  Mat2 d_theta_rho = Mat2::Zero();
  Mat26 d_anchor_pose = Mat26::Zero();
  Mat26 d_target_pose = Mat26::Zero();
};

// Endpoint-to-line distances of the reconstructed landmark line projected
// into the target camera, against the observed segment there.
std::optional<Vec2> nonstructural_residual(const NonStructuralLine& line,
                                           const Pose& T_w_anchor,
                                           const Pose& T_w_target,
                                           const Segment2D& obs,
                                           NonStructuralJacobians* jac = nullptr);

struct StructuralJacobians {
  Mat2 d_theta_rho = Mat2::Zero();
  Mat26 d_target_pose = Mat26::Zero();
};

std::optional<Vec2> structural_residual(const StructuralLine& line,
                                        const Pose& T_w_target,
                                        const Segment2D& obs,
                                        StructuralJacobians* jac = nullptr);

struct OrthonormalJacobians {
  Mat24 d_line = Mat24::Zero();
};

// Baseline: world-frame orthonormal line projected into the target camera.
std::optional<Vec2> orthonormal_residual(const OrthonormalLine& line_w,
                                         const Pose& T_w_target,
                                         const Segment2D& obs,
                                         OrthonormalJacobians* jac = nullptr);

}  // namespace linevio
