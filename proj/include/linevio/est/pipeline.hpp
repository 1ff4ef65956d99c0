#pragma once

#include <string>
#include <vector>

#include "linevio/classify/classifier.hpp"
#include "linevio/est/problem.hpp"
#include "linevio/match/line_matcher.hpp"
#include "linevio/sim/scenario.hpp"

namespace linevio {

struct VioConfig {
  int window_size = 10;
  bool use_points = true;
  bool use_ns_lines = true;
  bool use_s_lines = true;
  // Raster: patch-based matching on rendered frames. GroundTruthIds: oracle
  // association from the simulator (points always use it; KLT is out of scope).
  enum class Association { Raster, GroundTruthIds };
  Association association = Association::Raster;
  double sigma_px = 1.5;          // measurement whitening
  double cauchy_scale = 1.0;
  double min_parallax_deg = 1.0;  // landmark triangulation gate
  double demote_deg = 15.0;       // structural -> non-structural demotion
  double outlier_gate = 10.0;     // whitened residual gate for new blocks
  MatchConfig match;
  ClassificationConfig classification;
  SolveOptions solve;
  int max_solve_iterations_per_frame = 10;
  uint64_t seed = 1;
};

struct MapLineRecord {
  int id = -1;
  bool structural = false;
  Axis axis = Axis::Z;
  Segment3D seg;  // world frame
};

struct VioResult {
  bool ok = false;
  std::string message;
  std::vector<TimedPose> trajectory;
  std::vector<MapLineRecord> line_map;
  int solved_frames = 0;
  int created_landmarks = 0;
  int demoted_lines = 0;
};

// Full per-frame loop: classify, match (frame-to-frame with frame-to-map
// fallback), initialize landmarks, solve the window, slide. The first two
// poses are anchored to ground truth (gauge and scale, standing in for the
// out-of-scope IMU).
VioResult sliding_window_run(const Scenario& scenario, const VioConfig& config);

}  // namespace linevio
