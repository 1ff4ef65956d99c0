#include "linevio/est/pipeline.hpp"
#include <cstdlib>
#include <cstdio>

#include <algorithm>
#include <deque>
#include <map>
#include <memory>

#include "linevio/meas/residuals.hpp"

namespace linevio {

namespace {

struct TrackObservation {
  int frame = -1;
  Segment2D seg;
};

struct Track {
  int id = -1;
  std::vector<TrackObservation> obs;
  int structural_votes = 0;
  int nonstructural_votes = 0;
  int vote_manhattan = -1;
  Axis vote_axis = Axis::Z;
  std::map<int, int> axis_votes;  // (manhattan_id * 4 + axis) -> count
  int landmark = -1;
  BlockKind kind = BlockKind::NonStructuralLine;
  bool force_nonstructural = false;
  bool retired = false;
  int last_seen = -1;
  std::shared_ptr<const ImageGrid> last_img;
  Segment2D last_seg;
  int last_kf = -1;
};

struct PointTrack {
  int landmark = -1;
  bool retired = false;
  int last_seen = -1;
  std::vector<std::pair<int, Vec2>> pending;
};

// Inverse depth of the anchor observation from a two-ray triangulation;
// rays are p + t * (R [u, v, 1]) so t is the camera depth directly.
std::optional<double> triangulate_inverse_depth(const Pose& T_w_a,
                                                const Vec2& uv_a,
                                                const Pose& T_w_b,
                                                const Vec2& uv_b,
                                                double min_parallax_deg) {
  const Vec3 da = T_w_a.R * Vec3(uv_a.x(), uv_a.y(), 1.0);
  const Vec3 db = T_w_b.R * Vec3(uv_b.x(), uv_b.y(), 1.0);
  if (folded_angle(da, db) < deg2rad(min_parallax_deg)) return std::nullopt;
  const double uu = da.dot(da), ww = db.dot(db), uw = da.dot(db);
  const double det = uu * ww - uw * uw;
  if (det <= 1e-14 * uu * ww) return std::nullopt;
  const Vec3 d0 = T_w_a.p - T_w_b.p;
  const double t = (-d0.dot(da) * ww + uw * d0.dot(db)) / det;
  if (t < 0.05) return std::nullopt;
  return 1.0 / t;
}

}  // namespace

VioResult sliding_window_run(const Scenario& scenario, const VioConfig& config) {
  VioResult result;
  if (scenario.poses.size() < 2) {
    result.message = "scenario needs at least two poses";
    return result;
  }

  const auto observations = make_observations(scenario);
  const int n_frames = static_cast<int>(scenario.poses.size());

  SlidingWindowProblem problem;
  problem.loss.scale = config.cauchy_scale;
  problem.window_size = config.window_size;
  const Mat2 sqrt_info =
      Mat2::Identity() * (scenario.camera.fx / config.sigma_px);

  SolveOptions solve_opts = config.solve;
  solve_opts.max_iterations = config.max_solve_iterations_per_frame;

  Rng rng(config.seed);
  std::vector<ManhattanFrame> manhattan_frames;
  std::map<int, Track> tracks;
  std::map<int, PointTrack> point_tracks;
  std::deque<int> window;
  int next_track_id = 0;

  // Previous-frame matching state (raster association).
  std::shared_ptr<const ImageGrid> prev_img;
  std::vector<Segment2D> prev_segments;
  std::vector<int> prev_assignment;

  const bool lines_enabled = config.use_ns_lines || config.use_s_lines;
  const bool raster = lines_enabled &&
                      config.association == VioConfig::Association::Raster;

  auto try_add_block = [&](const ResidualBlock& b) {
    // Gate blocks that are not evaluable or wildly inconsistent at the
    // current estimate.
    SlidingWindowProblem& p = problem;
    const int ti = p.kf_index(b.target_kf);
    if (ti < 0) return false;
    std::optional<Vec2> r;
    switch (b.kind) {
      case BlockKind::Point: {
        const int ai = p.kf_index(b.anchor_kf);
        if (ai < 0) return false;
        r = point_residual(p.points[static_cast<size_t>(b.landmark)],
                           p.keyframes[static_cast<size_t>(ai)].T_w_c,
                           p.keyframes[static_cast<size_t>(ti)].T_w_c, b.obs_uv);
        break;
      }
      case BlockKind::NonStructuralLine: {
        const int ai = p.kf_index(b.anchor_kf);
        if (ai < 0) return false;
        r = nonstructural_residual(p.ns_lines[static_cast<size_t>(b.landmark)],
                                   p.keyframes[static_cast<size_t>(ai)].T_w_c,
                                   p.keyframes[static_cast<size_t>(ti)].T_w_c,
                                   b.obs_seg);
        break;
      }
      case BlockKind::StructuralLine: {
        r = structural_residual(p.s_lines[static_cast<size_t>(b.landmark)],
                                p.keyframes[static_cast<size_t>(ti)].T_w_c,
                                b.obs_seg);
        break;
      }
      default:
        return false;
    }
    if (!r) return false;
    if ((b.sqrt_info * *r).norm() > config.outlier_gate) return false;
    problem.blocks.push_back(b);
    return true;
  };

  for (int k = 0; k < n_frames; ++k) {
    // 1. Pose initialization: ground truth for the two gauge frames,
    //    constant velocity afterwards.
    Keyframe kf;
    kf.id = k;
    kf.timestamp = scenario.poses[static_cast<size_t>(k)].t;
    if (k < 2) {
      kf.T_w_c = scenario.poses[static_cast<size_t>(k)].T_w_c;
      kf.fixed = true;
    } else {
      const Pose& T1 = problem.keyframes[static_cast<size_t>(k - 1)].T_w_c;
      const Pose& T2 = problem.keyframes[static_cast<size_t>(k - 2)].T_w_c;
      kf.T_w_c = T1 * (T2.inverse() * T1);
      if (std::getenv("LINEVIO_GTINIT")) {
        kf.T_w_c = scenario.poses[static_cast<size_t>(k)].T_w_c;
      }
      kf.fixed = false;
    }
    problem.keyframes.push_back(kf);
    window.push_back(k);

    const FrameObservations& fo = observations[static_cast<size_t>(k)];

    // 2. Line handling.
    std::vector<int> assignment;
    std::shared_ptr<const ImageGrid> cur_img;
    std::vector<Segment2D> cur_segments;
    if (lines_enabled) {
      cur_segments.reserve(fo.lines.size());
      for (const auto& lo : fo.lines) cur_segments.push_back(lo.seg);

      const auto labels =
          classify(cur_segments, problem.keyframes.back().T_w_c.R,
                   Vec3(0, 0, -1), manhattan_frames, config.classification, rng)
              .labels;

      assignment.assign(cur_segments.size(), -1);
      if (config.association == VioConfig::Association::GroundTruthIds) {
        for (size_t i = 0; i < fo.lines.size(); ++i) {
          assignment[i] = fo.lines[i].line_id;
        }
        next_track_id = std::max(next_track_id, 1);
      } else {
        cur_img = std::make_shared<ImageGrid>(render_frame(scenario, k));
        FrameData cur{cur_img.get(), cur_segments};
        int matched = 0;
        if (prev_img) {
          FrameData prev{prev_img.get(), prev_segments};
          const Pose T_cur_prev =
              problem.keyframes.back().T_w_c.inverse() *
              problem.keyframes[static_cast<size_t>(k - 1)].T_w_c;
          const auto matches =
              match_frame_to_frame(prev, cur, T_cur_prev, config.match);
          for (const auto& m : matches) {
            const int tid = prev_assignment[static_cast<size_t>(m.prev_line_id)];
            if (tid >= 0 && assignment[static_cast<size_t>(m.cur_line_id)] < 0) {
              assignment[static_cast<size_t>(m.cur_line_id)] = tid;
              ++matched;
            }
          }
        }
        if (prev_img && matched < config.match.map_match_floor) {
          // Frame-to-map fallback for map lines not seen in the last frame.
          std::vector<MapLineView> views;
          for (const auto& [tid, tr] : tracks) {
            if (tr.landmark < 0 || !tr.last_img || tr.last_seen >= k - 1) {
              continue;
            }
            if (std::find(assignment.begin(), assignment.end(), tid) !=
                assignment.end()) {
              continue;
            }
            MapLineView v;
            v.line_id = tid;
            v.seg = tr.last_seg;
            v.img = tr.last_img;
            v.T_w_c = problem.keyframes[static_cast<size_t>(tr.last_kf)].T_w_c;
            views.push_back(v);
          }
          const auto matches = match_frame_to_map(
              views, FrameData{cur_img.get(), cur_segments},
              problem.keyframes.back().T_w_c, config.match);
          for (const auto& m : matches) {
            if (assignment[static_cast<size_t>(m.cur_line_id)] < 0) {
              assignment[static_cast<size_t>(m.cur_line_id)] = m.prev_line_id;
            }
          }
        }
        for (size_t i = 0; i < assignment.size(); ++i) {
          if (assignment[i] < 0) assignment[i] = next_track_id++;
        }
      }

      // Update tracks with this frame's observations and labels.
      for (size_t i = 0; i < cur_segments.size(); ++i) {
        const int tid = assignment[i];
        Track& tr = tracks[tid];
        if (tr.id < 0) tr.id = tid;
        tr.obs.push_back(TrackObservation{k, cur_segments[i]});
        if (labels[i].structural()) {
          ++tr.structural_votes;
          const int key = labels[i].manhattan_id * 4 +
                          static_cast<int>(labels[i].axis);
          const int votes = ++tr.axis_votes[key];
          const int best =
              tr.vote_manhattan < 0
                  ? 0
                  : tr.axis_votes[tr.vote_manhattan * 4 +
                                  static_cast<int>(tr.vote_axis)];
          if (tr.vote_manhattan < 0 || votes >= best) {
            tr.vote_manhattan = labels[i].manhattan_id;
            tr.vote_axis = labels[i].axis;
          }
        } else {
          ++tr.nonstructural_votes;
        }
        tr.last_seen = k;
        tr.last_seg = cur_segments[i];
        tr.last_kf = k;
        if (raster) tr.last_img = cur_img;

        // Existing landmark: add the new observation.
        if (tr.landmark >= 0) {
          tr.retired = false;
          ResidualBlock b;
          b.kind = tr.kind;
          b.landmark = tr.landmark;
          b.target_kf = k;
          b.obs_seg = cur_segments[i];
          b.sqrt_info = sqrt_info;
          if (tr.kind == BlockKind::NonStructuralLine) {
            b.anchor_kf = problem.ns_lines[static_cast<size_t>(tr.landmark)]
                              .anchor_keyframe_id;
            if (b.anchor_kf == k) continue;
          }
          try_add_block(b);
        }
      }

      prev_img = cur_img;
      prev_segments = cur_segments;
      prev_assignment = assignment;
    }

    // 3. Point handling (oracle association; KLT is out of scope).
    if (config.use_points) {
      for (const auto& po : fo.points) {
        PointTrack& pt = point_tracks[po.point_id];
        pt.last_seen = k;
        if (pt.landmark >= 0) {
          pt.retired = false;
          ResidualBlock b;
          b.kind = BlockKind::Point;
          b.landmark = pt.landmark;
          b.anchor_kf =
              problem.points[static_cast<size_t>(pt.landmark)].anchor_keyframe_id;
          b.target_kf = k;
          b.obs_uv = po.uv;
          b.sqrt_info = sqrt_info;
          if (b.anchor_kf != k) try_add_block(b);
          continue;
        }
        pt.pending.emplace_back(k, po.uv);
        if (pt.pending.size() < 2) continue;
        const auto& [f0, uv0] = pt.pending.front();
        const auto inv_depth = triangulate_inverse_depth(
            problem.keyframes[static_cast<size_t>(f0)].T_w_c, uv0,
            problem.keyframes[static_cast<size_t>(k)].T_w_c, po.uv,
            config.min_parallax_deg);
        if (!inv_depth) continue;
        PointLandmark lm;
        lm.anchor_keyframe_id = f0;
        lm.z = Vec3(uv0.x(), uv0.y(), 1.0);
        lm.lambda = *inv_depth;
        pt.landmark = static_cast<int>(problem.points.size());
        problem.points.push_back(lm);
        ++result.created_landmarks;
        for (const auto& [fj, uvj] : pt.pending) {
          if (fj == f0) continue;
          ResidualBlock b;
          b.kind = BlockKind::Point;
          b.landmark = pt.landmark;
          b.anchor_kf = f0;
          b.target_kf = fj;
          b.obs_uv = uvj;
          b.sqrt_info = sqrt_info;
          try_add_block(b);
        }
      }
    }

    // 4. Landmark creation for mature line tracks.
    if (lines_enabled) {
      for (auto& [tid, tr] : tracks) {
        if (tr.landmark >= 0 || tr.last_seen != k || tr.obs.size() < 2) {
          continue;
        }
        const auto& first = tr.obs.front();
        const Pose& T_w_0 =
            problem.keyframes[static_cast<size_t>(first.frame)].T_w_c;
        std::optional<PluckerLine> line_c0;
        for (size_t j = tr.obs.size(); j-- > 1 && !line_c0;) {
          const Pose T_0_j =
              T_w_0.inverse() *
              problem.keyframes[static_cast<size_t>(tr.obs[j].frame)].T_w_c;
          line_c0 = triangulate_line(first.seg, tr.obs[j].seg, T_0_j,
                                     config.min_parallax_deg);
        }
        if (!line_c0) continue;

        const bool wants_structural =
            config.use_s_lines && !tr.force_nonstructural &&
            tr.structural_votes > tr.nonstructural_votes &&
            tr.vote_manhattan >= 0 &&
            tr.vote_manhattan < static_cast<int>(manhattan_frames.size());

        bool created = false;
        if (wants_structural) {
          const PluckerLine line_w = transform_line(T_w_0, *line_c0);
          const auto sl = init_structural(
              line_w, manhattan_frames[static_cast<size_t>(tr.vote_manhattan)],
              T_w_0.p, tr.vote_axis, first.frame);
          if (sl) {
            tr.landmark = static_cast<int>(problem.s_lines.size());
            tr.kind = BlockKind::StructuralLine;
            problem.s_lines.push_back(*sl);
            created = true;
          }
        }
        if (!created && config.use_ns_lines) {
          const auto frame = build_anchor_frame(first.seg);
          if (!frame) continue;
          const auto ns = init_nonstructural(*line_c0, *frame, first.frame);
          if (!ns) continue;
          tr.landmark = static_cast<int>(problem.ns_lines.size());
          tr.kind = BlockKind::NonStructuralLine;
          problem.ns_lines.push_back(*ns);
          created = true;
        }
        if (!created) continue;
        ++result.created_landmarks;

        for (const auto& o : tr.obs) {
          if (tr.kind == BlockKind::NonStructuralLine && o.frame == first.frame)
            continue;
          ResidualBlock b;
          b.kind = tr.kind;
          b.landmark = tr.landmark;
          b.anchor_kf = first.frame;
          b.target_kf = o.frame;
          b.obs_seg = o.seg;
          b.sqrt_info = sqrt_info;
          try_add_block(b);
        }
      }
    }

    // 5. Solve the window.
    if (!problem.blocks.empty() && k >= 2) {
      const SolveReport rep = solve(problem, solve_opts);
      if (rep.ok) {
        ++result.solved_frames;
      }
      if (std::getenv("LINEVIO_DEBUG")) {
        const Vec3 err = problem.keyframes.back().T_w_c.p -
                         scenario.poses[static_cast<size_t>(k)].T_w_c.p;
        // Cost of the same problem with every state at ground truth.
        SlidingWindowProblem gt = problem;
        for (auto& kf : gt.keyframes) {
          kf.T_w_c = scenario.poses[static_cast<size_t>(kf.id)].T_w_c;
        }
        for (auto& [pid, ptr] : point_tracks) {
          if (ptr.landmark < 0) continue;
          auto& lm = gt.points[static_cast<size_t>(ptr.landmark)];
          const Vec3 pc =
              scenario.poses[static_cast<size_t>(lm.anchor_keyframe_id)]
                  .T_w_c.inverse() *
              scenario.points[static_cast<size_t>(pid)].p;
          lm.lambda = 1.0 / pc.z();
        }
        double gt_cost = 0.0;
        bool gt_ok = true;
        for (const auto& b : gt.blocks) {
          if (b.kind != BlockKind::Point) continue;
          const auto r = point_residual(
              gt.points[static_cast<size_t>(b.landmark)],
              gt.keyframes[static_cast<size_t>(gt.kf_index(b.anchor_kf))].T_w_c,
              gt.keyframes[static_cast<size_t>(gt.kf_index(b.target_kf))].T_w_c,
              b.obs_uv);
          if (!r) { gt_ok = false; break; }
          gt_cost += (b.sqrt_info * *r).squaredNorm();
        }
        if (k == 30) {
          SlidingWindowProblem deep_copy = problem;
          SolveOptions deep_opts = solve_opts;
          deep_opts.max_iterations = 200;
          deep_opts.rel_cost_tol = 0.0;
          const auto deep = solve(deep_copy, deep_opts);
          std::fprintf(stderr, "DEEP k=30: %.6g -> %.6g iters=%d (%s)\n",
                       deep.initial_cost, deep.final_cost, deep.iterations,
                       termination_name(deep.reason));
        }
        std::fprintf(stderr,
                     "k=%d blocks=%zu lms=%zu/%zu/%zu iters=%d cost %.3g -> "
                     "%.3g (%s) pose_err=%.4g gt_cost=%.3g%s\n",
                     k, problem.blocks.size(), problem.points.size(),
                     problem.ns_lines.size(), problem.s_lines.size(),
                     rep.iterations, rep.initial_cost, rep.final_cost,
                     termination_name(rep.reason), err.norm(), gt_cost,
                     gt_ok ? "" : " (gt eval failed)");
      }
    }

    // 6. Structural consistency check; demote drifting lines.
    if (config.use_s_lines) {
      for (auto& [tid, tr] : tracks) {
        if (tr.landmark < 0 || tr.kind != BlockKind::StructuralLine ||
            tr.last_seen != k || tr.obs.size() < 2) {
          continue;
        }
        const auto& first = tr.obs.front();
        const auto& last = tr.obs.back();
        const auto pl1 = plane_from_segment(first.seg);
        const auto pl2 = plane_from_segment(last.seg);
        if (!pl1 || !pl2) continue;
        const Pose& T1 = problem.keyframes[static_cast<size_t>(first.frame)].T_w_c;
        const Pose& T2 = problem.keyframes[static_cast<size_t>(last.frame)].T_w_c;
        const Vec3 n1 = T1.R * pl1->normal().normalized();
        const Vec3 n2 = T2.R * pl2->normal().normalized();
        Vec3 dir = n1.cross(n2);
        if (dir.norm() < std::sin(deg2rad(2.0))) continue;  // low parallax
        dir.normalize();
        const auto& sl = problem.s_lines[static_cast<size_t>(tr.landmark)];
        const Vec3 axis_dir = sl.manhattan.axis_direction_world(sl.axis);
        if (folded_angle(dir, axis_dir) > deg2rad(config.demote_deg)) {
          // Drop the structural landmark; the track re-initializes as
          // non-structural on a later frame.
          std::erase_if(problem.blocks, [&](const ResidualBlock& b) {
            return b.kind == BlockKind::StructuralLine &&
                   b.landmark == tr.landmark;
          });
          tr.landmark = -1;
          tr.force_nonstructural = true;
          ++result.demoted_lines;
        }
      }
    }

    // 7. Slide: the oldest keyframe's pose freezes at its current estimate
    //    and leaves the state. Its observations of landmarks still tracked
    //    in the window remain as constraints against the frozen pose; only
    //    observations exclusive to retired landmarks are dropped with them.
    while (static_cast<int>(window.size()) > config.window_size) {
      const int dropped = window.front();
      window.pop_front();
      problem.keyframes[static_cast<size_t>(dropped)].fixed = true;

      const int horizon = window.front();
      for (auto& [tid, tr] : tracks) {
        if (tr.landmark >= 0 && !tr.retired && tr.last_seen < horizon) {
          const BlockKind kind = tr.kind;
          const int lm = tr.landmark;
          std::erase_if(problem.blocks, [kind, lm](const ResidualBlock& b) {
            return b.kind == kind && b.landmark == lm;
          });
          tr.retired = true;
        }
      }
      if (config.use_points) {
        for (auto& [pid, pt] : point_tracks) {
          if (pt.landmark >= 0 && !pt.retired && pt.last_seen < horizon) {
            const int lm = pt.landmark;
            std::erase_if(problem.blocks, [lm](const ResidualBlock& b) {
              return b.kind == BlockKind::Point && b.landmark == lm;
            });
            pt.retired = true;
          }
        }
      }
    }
  }

  // Final trajectory and map.
  result.trajectory.reserve(problem.keyframes.size());
  for (const auto& kf : problem.keyframes) {
    result.trajectory.push_back(TimedPose{kf.timestamp, kf.T_w_c});
  }
  for (const auto& [tid, tr] : tracks) {
    if (tr.landmark < 0) continue;
    MapLineRecord rec;
    rec.id = tid;
    PluckerLine line_w;
    if (tr.kind == BlockKind::StructuralLine) {
      const auto& sl = problem.s_lines[static_cast<size_t>(tr.landmark)];
      rec.structural = true;
      rec.axis = sl.axis;
      line_w = structural_to_world_line(sl);
    } else {
      const auto& ns = problem.ns_lines[static_cast<size_t>(tr.landmark)];
      const auto [s_c, v_c] = nonstructural_to_camera_line(ns);
      const int ai = problem.kf_index(ns.anchor_keyframe_id);
      if (ai < 0) continue;
      line_w = transform_line(problem.keyframes[static_cast<size_t>(ai)].T_w_c,
                              plucker_from_point_direction(s_c, v_c));
    }
    // Extent from the first and last observations.
    const auto& first = tr.obs.front();
    const auto& last = tr.obs.back();
    const auto seg1 =
        trim_line(line_w, first.seg,
                  problem.keyframes[static_cast<size_t>(first.frame)].T_w_c);
    const auto seg2 =
        trim_line(line_w, last.seg,
                  problem.keyframes[static_cast<size_t>(last.frame)].T_w_c);
    if (!seg1 && !seg2) continue;
    if (seg1 && seg2) {
      const PluckerLine nl = line_w.normalized();
      const Vec3 p0 = nl.closest_point_to_origin();
      double lo = 1e300, hi = -1e300;
      for (const Vec3& p : {seg1->s, seg1->e, seg2->s, seg2->e}) {
        const double t = (p - p0).dot(nl.v);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
      rec.seg = Segment3D{p0 + lo * nl.v, p0 + hi * nl.v};
    } else {
      rec.seg = seg1 ? *seg1 : *seg2;
    }
    result.line_map.push_back(rec);
  }
  std::sort(result.line_map.begin(), result.line_map.end(),
            [](const MapLineRecord& a, const MapLineRecord& b) {
              return a.id < b.id;
            });

  result.ok = true;
  return result;
}

}  // namespace linevio
