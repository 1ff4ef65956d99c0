#include "linevio/classify/classifier.hpp"

#include <algorithm>
#include <cmath>

namespace linevio {

VanishingPoint vertical_vp(const Mat3& R_w_c, const Vec3& gravity_w) {
  return VanishingPoint{R_w_c.transpose() * gravity_w.normalized()};
}

std::optional<VpConsistency> segment_vp_consistency(const Segment2D& seg,
                                                    const VanishingPoint& vp) {
  if (seg.degenerate()) return std::nullopt;
  const Vec2 mid = seg.midpoint_uv();
  const Vec2 dir = seg.direction_uv();

  Vec2 ray;
  if (std::abs(vp.v.z()) > 1e-9 * vp.v.norm()) {
    ray = mid - vp.v.head<2>() / vp.v.z();
    if (ray.norm() < 1e-12) return std::nullopt;  // vp on the midpoint
  } else {
    ray = vp.v.head<2>();
  }

  VpConsistency out;
  out.a_err = folded_angle(ray, dir);

  const Vec3 l = seg.s.cross(seg.e);
  const double lh = l.head<2>().norm();
  double vh = vp.v.head<2>().norm();
  if (vh < 1e-9) vh = vp.v.norm();  // vp at the principal point
  if (lh < 1e-15 || vh < 1e-15) return std::nullopt;
  out.d_err = std::abs(vp.v.dot(l)) / (vh * lh);
  return out;
}

RansacVpResult ransac_vp(const std::vector<Segment2D>& segments,
                         const VanishingPoint& v_z, const Vec3& gravity_cam,
                         const ClassificationConfig& config, Rng& rng) {
  (void)v_z;
  RansacVpResult best;
  const int n = static_cast<int>(segments.size());
  if (n < 2) return best;
  const Vec3 g = gravity_cam.normalized();

  std::vector<Vec3> lines(segments.size());
  for (size_t i = 0; i < segments.size(); ++i) {
    lines[i] = segments[i].s.cross(segments[i].e);
  }

  for (int it = 0; it < config.ransac_iterations; ++it) {
    const int i = rng.uniform_int(0, n - 1);
    int j = rng.uniform_int(0, n - 2);
    if (j >= i) ++j;
    Vec3 hyp = lines[i].cross(lines[j]);
    if (hyp.norm() < 1e-12) continue;  // same projected line
    hyp.normalize();
    if (std::abs(hyp.dot(g)) > std::sin(config.gravity_orthogonality_tol)) {
      continue;
    }
    const VanishingPoint vp{hyp};
    int inliers = 0;
    for (const auto& seg : segments) {
      const auto c = segment_vp_consistency(seg, vp);
      if (c && c->a_err <= config.ransac_inlier_threshold) ++inliers;
    }
    if (inliers > best.inliers) {
      best.inliers = inliers;
      best.vp_x = vp;
      best.dir_x_cam = hyp;
    }
  }

  if (best.inliers < config.ransac_min_inliers) return best;
  best.found = true;
  best.dir_y_cam = g.cross(best.dir_x_cam).normalized();
  best.vp_y = VanishingPoint{best.dir_y_cam};
  return best;
}

namespace {

bool consistent(const Segment2D& seg, const VanishingPoint& vp,
                const ClassificationConfig& config) {
  const auto c = segment_vp_consistency(seg, vp);
  return c && c->a_err <= config.a_th && c->d_err <= config.d_th;
}

}  // namespace

ClassifyResult classify(const std::vector<Segment2D>& segments,
                        const Mat3& R_w_c, const Vec3& gravity_w,
                        std::vector<ManhattanFrame>& frames,
                        const ClassificationConfig& config, Rng& rng) {
  ClassifyResult result;
  result.labels.assign(segments.size(), LineLabel{});
  if (segments.empty()) return result;

  const VanishingPoint v_z = vertical_vp(R_w_c, gravity_w);
  const Vec3 g_cam = v_z.v.normalized();

  std::vector<bool> done(segments.size(), false);

  // Vertical lines first.
  bool any_z = false;
  for (size_t i = 0; i < segments.size(); ++i) {
    if (consistent(segments[i], v_z, config)) {
      any_z = true;
      done[i] = true;
    }
  }
  if (any_z && frames.empty()) {
    frames.push_back(ManhattanFrame{0.0});
  }
  for (size_t i = 0; i < segments.size(); ++i) {
    if (done[i]) {
      result.labels[i] = LineLabel{LineLabel::Kind::Structural, 0, Axis::Z};
    }
  }

  // Attach the rest to already-registered Manhattan frames.
  auto attach_to_frame = [&](int frame_id) {
    const ManhattanFrame& f = frames[static_cast<size_t>(frame_id)];
    const VanishingPoint vpx{R_w_c.transpose() *
                             f.axis_direction_world(Axis::X)};
    const VanishingPoint vpy{R_w_c.transpose() *
                             f.axis_direction_world(Axis::Y)};
    for (size_t i = 0; i < segments.size(); ++i) {
      if (done[i]) continue;
      if (consistent(segments[i], vpx, config)) {
        result.labels[i] =
            LineLabel{LineLabel::Kind::Structural, frame_id, Axis::X};
        done[i] = true;
      } else if (consistent(segments[i], vpy, config)) {
        result.labels[i] =
            LineLabel{LineLabel::Kind::Structural, frame_id, Axis::Y};
        done[i] = true;
      }
    }
  };
  for (int fid = 0; fid < static_cast<int>(frames.size()); ++fid) {
    attach_to_frame(fid);
  }

  const size_t unclassified =
      static_cast<size_t>(std::count(done.begin(), done.end(), false));
  if (static_cast<double>(unclassified) >
      config.unclassified_fraction_trigger *
          static_cast<double>(segments.size())) {
    std::vector<Segment2D> remaining;
    remaining.reserve(unclassified);
    for (size_t i = 0; i < segments.size(); ++i) {
      if (!done[i]) remaining.push_back(segments[i]);
    }
    const RansacVpResult r = ransac_vp(remaining, v_z, g_cam, config, rng);
    if (r.found) {
      const Vec3 dir_w = R_w_c * r.dir_x_cam;
      const double horiz = std::hypot(dir_w.x(), dir_w.y());
      if (horiz > 1e-6) {
        const double phi =
            wrap_manhattan_yaw(std::atan2(dir_w.y(), dir_w.x()));
        frames.push_back(ManhattanFrame{phi});
        result.new_manhattan_id = static_cast<int>(frames.size()) - 1;
        attach_to_frame(result.new_manhattan_id);
      }
    }
  }

  return result;
}

}  // namespace linevio
