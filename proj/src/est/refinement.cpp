#include "linevio/est/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace linevio {

namespace {

struct LineTrack {
  int line_id = -1;
  std::vector<std::pair<int, Segment2D>> obs;  // (frame, observation)
};

// Sum of squared endpoint-to-line distances of a world-frame line candidate
// over (a subsample of) the track, for ranking initializations.
double candidate_cost(const PluckerLine& line_w, const LineTrack& track,
                      const std::vector<TimedPose>& poses, size_t max_terms) {
  const size_t stride = std::max<size_t>(1, track.obs.size() / max_terms);
  double cost = 0.0;
  for (size_t i = 0; i < track.obs.size(); i += stride) {
    const auto& [f, seg] = track.obs[i];
    const PluckerLine lc =
        transform_line(poses[static_cast<size_t>(f)].T_w_c.inverse(), line_w);
    const double h = lc.n.head<2>().norm();
    if (h < 1e-12) {
      cost += 1.0;  // line through the optical center, strongly penalized
      continue;
    }
    const double ds = seg.s.dot(lc.n) / h;
    const double de = seg.e.dot(lc.n) / h;
    cost += ds * ds + de * de;
  }
  return cost;
}

}  // namespace

RefinementResult landmark_refinement(const Scenario& scenario,
                                     const std::vector<FrameObservations>& obs,
                                     LineRepr repr,
                                     const RefinementOptions& options) {
  RefinementResult result;

  std::map<int, LineTrack> tracks;
  for (const auto& fo : obs) {
    for (const auto& lo : fo.lines) {
      auto& tr = tracks[lo.line_id];
      tr.line_id = lo.line_id;
      tr.obs.emplace_back(fo.keyframe_id, lo.seg);
    }
  }

  SlidingWindowProblem problem;
  problem.loss.scale = options.cauchy_scale;
  problem.keyframes.reserve(scenario.poses.size());
  for (size_t i = 0; i < scenario.poses.size(); ++i) {
    problem.keyframes.push_back(Keyframe{static_cast<int>(i),
                                         scenario.poses[i].t,
                                         scenario.poses[i].T_w_c, true});
  }
  const Mat2 sqrt_info =
      Mat2::Identity() * (scenario.camera.fx / options.sigma_px);

  struct Slot {
    int line_id;
    int landmark;
    int anchor_frame;
    Segment2D anchor_obs;
  };
  std::vector<Slot> slots;

  for (auto& [line_id, track] : tracks) {
    auto fail = [&] {
      ++result.failed_triangulation;
      result.lines.push_back(LineEstimate{line_id, false, {}, {}});
    };
    if (track.obs.size() < 2) {
      fail();
      continue;
    }

    // Anchor on the longest observation: the anchor geometry is frozen, and
    // a clipped stub of a line entering the view bakes its endpoint noise
    // into the plane for good.
    {
      size_t anchor_idx = 0;
      double longest = -1.0;
      for (size_t j = 0; j < track.obs.size(); ++j) {
        const double len =
            (track.obs[j].second.e - track.obs[j].second.s).norm();
        if (len > longest) {
          longest = len;
          anchor_idx = j;
        }
      }
      std::swap(track.obs[0], track.obs[anchor_idx]);
    }
    const auto& [f0, seg0] = track.obs.front();
    const Pose& T_w_0 = scenario.poses[static_cast<size_t>(f0)].T_w_c;

    // Initialization shoot-out: triangulate against a handful of partners
    // spread over the track and keep the candidate that explains the whole
    // track best.
    std::optional<PluckerLine> line_c0;
    const auto anchor_plane = plane_from_segment(seg0);
    if (anchor_plane) {
      double best_score = 0.0;
      const size_t n = track.obs.size();
      const size_t step = std::max<size_t>(1, n / 8);
      for (size_t j = 1; j < n; j += step) {
        const auto& [fj, segj] = track.obs[j];
        const Pose T_0_j =
            T_w_0.inverse() * scenario.poses[static_cast<size_t>(fj)].T_w_c;
        const auto cand =
            triangulate_line(seg0, segj, T_0_j, options.min_parallax_deg);
        if (!cand) continue;
        const double score = candidate_cost(transform_line(T_w_0, *cand),
                                            track, scenario.poses, 50);
        if (!line_c0 || score < best_score) {
          line_c0 = cand;
          best_score = score;
        }
      }
    }
    if (!line_c0) {
      fail();
      continue;
    }

    int landmark = -1;
    if (repr == LineRepr::NS2) {
      const auto frame = build_anchor_frame(seg0);
      if (!frame) {
        fail();
        continue;
      }
      // The representation pins the line to the anchor observation plane;
      // project the fitted direction into it.
      PluckerLine line_in_plane = *line_c0;
      const Vec3 z = frame->z_axis();
      line_in_plane.v -= line_in_plane.v.dot(z) * z;
      if (line_in_plane.v.norm() < 1e-6) {
        fail();
        continue;
      }
      // Inverse distance of the observed start endpoint from the fitted
      // line, instead of the generic default.
      double rho0 = kDefaultInverseDepthInit;
      const auto trimmed = trim_line(*line_c0, seg0, Pose::Identity());
      if (trimmed && trimmed->s.norm() > 0.05) {
        rho0 = 1.0 / trimmed->s.norm();
      }
      const auto ns = init_nonstructural(line_in_plane, *frame, f0, rho0);
      if (!ns) {
        fail();
        continue;
      }
      landmark = static_cast<int>(problem.ns_lines.size());
      problem.ns_lines.push_back(*ns);
      for (size_t j = 1; j < track.obs.size(); ++j) {
        ResidualBlock b;
        b.kind = BlockKind::NonStructuralLine;
        b.landmark = landmark;
        b.anchor_kf = f0;
        b.target_kf = track.obs[j].first;
        b.obs_seg = track.obs[j].second;
        b.sqrt_info = sqrt_info;
        problem.blocks.push_back(b);
      }
    } else {
      landmark = static_cast<int>(problem.orth_lines.size());
      problem.orth_lines.push_back(
          orthonormal_from_plucker(transform_line(T_w_0, *line_c0)));
      for (const auto& [fj, segj] : track.obs) {
        ResidualBlock b;
        b.kind = BlockKind::OrthonormalLine;
        b.landmark = landmark;
        b.target_kf = fj;
        b.obs_seg = segj;
        b.sqrt_info = sqrt_info;
        problem.blocks.push_back(b);
      }
    }
    slots.push_back(Slot{line_id, landmark, f0, seg0});
    result.lines.push_back(LineEstimate{line_id, true, {}, {}});
  }

  // One joint robustified solve over all line parameters, poses fixed.
  result.report = solve(problem, options.solve);

  std::map<int, LineEstimate*> by_id;
  for (auto& le : result.lines) by_id[le.line_id] = &le;
  for (const auto& slot : slots) {
    LineEstimate* le = by_id[slot.line_id];
    const Pose& T_w_a =
        scenario.poses[static_cast<size_t>(slot.anchor_frame)].T_w_c;
    if (repr == LineRepr::NS2) {
      const auto& ns = problem.ns_lines[static_cast<size_t>(slot.landmark)];
      const auto [s_c, v_c] = nonstructural_to_camera_line(ns);
      le->line_w = transform_line(T_w_a, plucker_from_point_direction(s_c, v_c))
                       .normalized();
    } else {
      le->line_w = orthonormal_to_plucker(
                       problem.orth_lines[static_cast<size_t>(slot.landmark)])
                       .normalized();
    }
    const auto trimmed = trim_line(le->line_w, slot.anchor_obs, T_w_a);
    if (trimmed) {
      le->endpoints_w = *trimmed;
    } else {
      le->ok = false;
    }
  }
  return result;
}

ReconstructionError reconstruction_error(
    const std::vector<LineEstimate>& estimates,
    const std::vector<LineLandmark3D>& ground_truth) {
  std::map<int, const LineLandmark3D*> gt_by_id;
  for (const auto& l : ground_truth) gt_by_id[l.id] = &l;

  ReconstructionError out;
  double sum_sq = 0.0;
  for (const auto& est : estimates) {
    const auto it = gt_by_id.find(est.line_id);
    if (!est.ok || it == gt_by_id.end()) {
      ++out.skipped;
      continue;
    }
    const PluckerLine line = est.line_w.normalized();
    const Vec3 p0 = line.closest_point_to_origin();
    const Segment3D& gt = it->second->seg;
    // Trim against the ground-truth extent.
    const Vec3 a = p0 + (gt.s - p0).dot(line.v) * line.v;
    const Vec3 b = p0 + (gt.e - p0).dot(line.v) * line.v;
    const double direct = (a - gt.s).squaredNorm() + (b - gt.e).squaredNorm();
    const double swapped = (a - gt.e).squaredNorm() + (b - gt.s).squaredNorm();
    sum_sq += std::min(direct, swapped);
    ++out.evaluated;
  }
  if (out.evaluated > 0) {
    out.rmse_cm =
        std::sqrt(sum_sq / (2.0 * static_cast<double>(out.evaluated))) * 100.0;
  }
  return out;
}

}  // namespace linevio
