#include "linevio/match/line_matcher.hpp"

#include <algorithm>
#include <cmath>

namespace linevio {

std::vector<Vec2> sample_line_points(const Vec2& s_px, const Vec2& e_px,
                                     double spacing) {
  std::vector<Vec2> pts;
  const double len = (e_px - s_px).norm();
  const int count = static_cast<int>(std::floor(len / spacing)) + 1;
  if (count < 2) {
    pts.push_back(0.5 * (s_px + e_px));
    return pts;
  }
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    pts.push_back(s_px + t * (e_px - s_px));
  }
  return pts;
}

std::optional<Vec2> epipolar_search(const ImageGrid& prev_img,
                                    const Vec2& pt_prev_px, const Mat3& E,
                                    const ImageGrid& cur_img,
                                    const MatchConfig& config) {
  const auto ref = extract_patch(prev_img, pt_prev_px, config.patch_half_width);
  if (!ref) return std::nullopt;

  const Vec3 x1 = prev_img.camera.to_normalized(pt_prev_px);
  const Vec3 l_px = cur_img.camera.line_to_pixel(E * x1);
  const double h = l_px.head<2>().norm();
  if (h < 1e-12) return std::nullopt;
  const Vec2 normal = l_px.head<2>() / h;
  const Vec2 dir(-normal.y(), normal.x());

  // Start from the closest point of the epipolar line to the previous
  // location (small-motion prior).
  const double dist = (l_px.head<2>().dot(pt_prev_px) + l_px.z()) / h;
  const Vec2 base = pt_prev_px - dist * normal;

  std::optional<Vec2> best;
  double best_score = 0.0;
  const int steps = static_cast<int>(config.search_length);
  const int band = static_cast<int>(config.epipolar_search_halfwidth);
  for (int s = -steps; s <= steps; ++s) {
    for (int o = -band; o <= band; ++o) {
      const Vec2 cand = base + static_cast<double>(s) * dir +
                        static_cast<double>(o) * normal;
      const auto patch = extract_patch(cur_img, cand, config.patch_half_width);
      if (!patch) continue;
      const auto score = zmssd(*ref, *patch);
      if (!score) continue;
      if (!best || *score < best_score) {
        best = cand;
        best_score = *score;
      }
    }
  }
  return best;
}

namespace {

double point_to_segment_line_distance_px(const Vec2& p, const Vec2& s,
                                         const Vec2& e) {
  const Vec2 d = e - s;
  const double len = d.norm();
  if (len < 1e-12) return (p - s).norm();
  return std::abs(d.x() * (p.y() - s.y()) - d.y() * (p.x() - s.x())) / len;
}

struct Candidate {
  int prev_idx;
  int cur_idx;
  int valid;
  int samples;
};

}  // namespace

std::vector<LineMatch> match_frame_to_frame(const FrameData& prev,
                                            const FrameData& cur,
                                            const Pose& T_cur_prev,
                                            const MatchConfig& config) {
  std::vector<LineMatch> out;
  if (prev.img == nullptr || cur.img == nullptr) return out;
  const auto E = essential_matrix(T_cur_prev);
  if (!E) return out;

  const CameraModel& cam_prev = prev.img->camera;
  const CameraModel& cam_cur = cur.img->camera;

  std::vector<std::pair<Vec2, Vec2>> cur_px(cur.segments.size());
  for (size_t j = 0; j < cur.segments.size(); ++j) {
    cur_px[j] = {cam_cur.to_pixel(cur.segments[j].s),
                 cam_cur.to_pixel(cur.segments[j].e)};
  }

  std::vector<Candidate> candidates;
  for (size_t i = 0; i < prev.segments.size(); ++i) {
    const Vec2 s_px = cam_prev.to_pixel(prev.segments[i].s);
    const Vec2 e_px = cam_prev.to_pixel(prev.segments[i].e);
    const auto samples = sample_line_points(s_px, e_px, config.sample_spacing);

    std::vector<Vec2> tracked;
    tracked.reserve(samples.size());
    for (const Vec2& p : samples) {
      const auto q = epipolar_search(*prev.img, p, *E, *cur.img, config);
      if (q) tracked.push_back(*q);
    }

    int best_valid = 0;
    int best_j = -1;
    for (size_t j = 0; j < cur.segments.size(); ++j) {
      int valid = 0;
      for (const Vec2& q : tracked) {
        if (point_to_segment_line_distance_px(q, cur_px[j].first,
                                              cur_px[j].second) < config.m_th) {
          ++valid;
        }
      }
      if (valid > best_valid) {
        best_valid = valid;
        best_j = static_cast<int>(j);
      }
    }
    const int n_samples = static_cast<int>(samples.size());
    if (best_j >= 0 &&
        best_valid >= config.valid_fraction * static_cast<double>(n_samples)) {
      candidates.push_back(
          Candidate{static_cast<int>(i), best_j, best_valid, n_samples});
    }
  }

  // One match per current segment, strongest candidate first.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.valid != b.valid) return a.valid > b.valid;
                     return a.prev_idx < b.prev_idx;
                   });
  std::vector<bool> cur_taken(cur.segments.size(), false);
  for (const Candidate& c : candidates) {
    if (cur_taken[static_cast<size_t>(c.cur_idx)]) continue;
    cur_taken[static_cast<size_t>(c.cur_idx)] = true;
    LineMatch m;
    m.prev_line_id = c.prev_idx;
    m.cur_line_id = c.cur_idx;
    m.valid_point_count = c.valid;
    m.sample_count = c.samples;
    m.score = static_cast<double>(c.valid) / static_cast<double>(c.samples);
    out.push_back(m);
  }
  return out;
}

namespace {

// Parameter of the intersection of pixel line l with segment s + t*(e - s);
// empty if they are parallel.
std::optional<double> intersect_param(const Vec3& l, const Vec2& s,
                                      const Vec2& e) {
  const double denom = l.x() * (e.x() - s.x()) + l.y() * (e.y() - s.y());
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return -(l.x() * s.x() + l.y() * s.y() + l.z()) / denom;
}

}  // namespace

std::vector<LineMatch> match_frame_to_map(
    const std::vector<MapLineView>& map_lines, const FrameData& cur,
    const Pose& T_w_cur, const MatchConfig& config) {
  std::vector<LineMatch> out;
  if (cur.img == nullptr) return out;
  const CameraModel& cam = cur.img->camera;

  struct MapCandidate {
    int map_idx;
    int cur_idx;
    double score;
    int samples;
  };
  std::vector<MapCandidate> candidates;

  for (size_t mi = 0; mi < map_lines.size(); ++mi) {
    const MapLineView& view = map_lines[mi];
    if (!view.img) continue;
    const Pose T_cur_ref = T_w_cur.inverse() * view.T_w_c;
    const auto E = essential_matrix(T_cur_ref);
    if (!E) continue;  // zero baseline, epipolar geometry undefined

    const Vec3 ep_s = cam.line_to_pixel(*E * view.seg.s);
    const Vec3 ep_e = cam.line_to_pixel(*E * view.seg.e);
    const Vec2 ref_s = view.img->camera.to_pixel(view.seg.s);
    const Vec2 ref_e = view.img->camera.to_pixel(view.seg.e);

    double best_score = -2.0;
    int best_j = -1;
    int best_samples = 0;
    for (size_t j = 0; j < cur.segments.size(); ++j) {
      const Vec2 c_s = cam.to_pixel(cur.segments[j].s);
      const Vec2 c_e = cam.to_pixel(cur.segments[j].e);
      const auto t1 = intersect_param(ep_s, c_s, c_e);
      const auto t2 = intersect_param(ep_e, c_s, c_e);
      if (!t1 || !t2 || std::abs(*t2 - *t1) < 1e-9) continue;

      // Co-visible parameter range on the reference segment.
      const double tau_a = (0.0 - *t1) / (*t2 - *t1);
      const double tau_b = (1.0 - *t1) / (*t2 - *t1);
      const double tau_lo = std::max(0.0, std::min(tau_a, tau_b));
      const double tau_hi = std::min(1.0, std::max(tau_a, tau_b));
      if (tau_hi <= tau_lo) continue;

      const double cur_len =
          std::abs(tau_hi - tau_lo) * std::abs(*t2 - *t1) * (c_e - c_s).norm();
      int k = static_cast<int>(std::floor(cur_len / config.sample_spacing)) + 1;
      k = std::clamp(k, 2, 24);

      std::vector<double> ref_seq, cur_seq;
      bool ok = true;
      for (int a = 0; a < k && ok; ++a) {
        const double tau =
            tau_lo + (tau_hi - tau_lo) * static_cast<double>(a) /
                         static_cast<double>(k - 1);
        const Vec2 pr = ref_s + tau * (ref_e - ref_s);
        const double t = *t1 + tau * (*t2 - *t1);
        const Vec2 pc = c_s + t * (c_e - c_s);
        const auto patch_r =
            extract_patch(*view.img, pr, config.patch_half_width);
        const auto patch_c = extract_patch(*cur.img, pc, config.patch_half_width);
        if (!patch_r || !patch_c) {
          ok = false;
          break;
        }
        ref_seq.insert(ref_seq.end(), patch_r->begin(), patch_r->end());
        cur_seq.insert(cur_seq.end(), patch_c->begin(), patch_c->end());
      }
      if (!ok || ref_seq.empty()) continue;
      const auto score = zncc(ref_seq, cur_seq);
      if (!score) continue;
      if (*score > best_score) {
        best_score = *score;
        best_j = static_cast<int>(j);
        best_samples = k;
      }
    }
    if (best_j >= 0 && best_score >= config.zncc_accept) {
      candidates.push_back(MapCandidate{static_cast<int>(mi), best_j,
                                        best_score, best_samples});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const MapCandidate& a, const MapCandidate& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return map_lines[static_cast<size_t>(a.map_idx)].line_id <
                            map_lines[static_cast<size_t>(b.map_idx)].line_id;
                   });
  std::vector<bool> cur_taken(cur.segments.size(), false);
  for (const MapCandidate& c : candidates) {
    if (cur_taken[static_cast<size_t>(c.cur_idx)]) continue;
    cur_taken[static_cast<size_t>(c.cur_idx)] = true;
    LineMatch m;
    m.prev_line_id = map_lines[static_cast<size_t>(c.map_idx)].line_id;
    m.cur_line_id = c.cur_idx;
    m.score = c.score;
    m.valid_point_count = c.samples;
    m.sample_count = c.samples;
    out.push_back(m);
  }
  return out;
}

}  // namespace linevio
