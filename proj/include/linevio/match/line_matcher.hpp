#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "linevio/core/plucker.hpp"
#include "linevio/core/pose.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/match/image.hpp"

namespace linevio {

struct MatchConfig {
  double sample_spacing = 5.0;          // pixels between samples on a segment
  int patch_half_width = 4;             // 9x9 patches
  double m_th = 5.0;                    // pixels, tracked-point-to-line gate
  double valid_fraction = 0.8;          // of sampling points on the prev line
  double epipolar_search_halfwidth = 2.0;  // pixels across the epipolar line
  double search_length = 50.0;          // pixels along the epipolar line
  double zncc_accept = 0.85;            // frame-to-map acceptance
  int map_match_floor = 15;             // frame-to-map kicks in below this
};

struct LineMatch {
  int prev_line_id = -1;  // previous-frame segment index or map line id
  int cur_line_id = -1;   // current-frame segment index
  double score = 0.0;
  int valid_point_count = 0;
  int sample_count = 0;
};

// Evenly spaced points including both endpoints; a segment shorter than the
// spacing yields its midpoint.
std::vector<Vec2> sample_line_points(const Vec2& s_px, const Vec2& e_px,
                                     double spacing);

// ZMSSD-best candidate along the epipolar line of pt_prev within the search
// band centered on the closest point of the line to pt_prev.
std::optional<Vec2> epipolar_search(const ImageGrid& prev_img,
                                    const Vec2& pt_prev_px, const Mat3& E,
                                    const ImageGrid& cur_img,
                                    const MatchConfig& config);

// One frame's matching inputs: the raster plus the detected segments on the
// normalized plane (the raster's camera converts to pixels).
struct FrameData {
  const ImageGrid* img = nullptr;
  std::vector<Segment2D> segments;
};

std::vector<LineMatch> match_frame_to_frame(const FrameData& prev,
                                            const FrameData& cur,
                                            const Pose& T_cur_prev,
                                            const MatchConfig& config);

// Latest stored observation of a map line.
struct MapLineView {
  int line_id = -1;
  Segment2D seg;
  std::shared_ptr<const ImageGrid> img;
  Pose T_w_c;  // world-from-camera at that observation
};

std::vector<LineMatch> match_frame_to_map(
    const std::vector<MapLineView>& map_lines, const FrameData& cur,
    const Pose& T_w_cur, const MatchConfig& config);

}  // namespace linevio
