#pragma once

#include <string>
#include <vector>

#include "linevio/core/pose.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/lines/nonstructural.hpp"
#include "linevio/lines/orthonormal.hpp"
#include "linevio/lines/point_landmark.hpp"
#include "linevio/lines/structural.hpp"
#include "linevio/meas/loss.hpp"

namespace linevio {

enum class BlockKind { Point, NonStructuralLine, StructuralLine, OrthonormalLine };

struct ResidualBlock {
  BlockKind kind = BlockKind::Point;
  int landmark = -1;    // index into the matching landmark vector
  int anchor_kf = -1;   // keyframe id (points, non-structural lines)
  int target_kf = -1;   // keyframe id of the observation
  Segment2D obs_seg;    // line observations
  Vec2 obs_uv = Vec2::Zero();  // point observations
  Mat2 sqrt_info = Mat2::Identity();
};

struct Keyframe {
  int id = -1;
  double timestamp = 0.0;
  Pose T_w_c;
  bool fixed = false;
};

struct SlidingWindowProblem {
  std::vector<Keyframe> keyframes;
  std::vector<PointLandmark> points;
  std::vector<NonStructuralLine> ns_lines;
  std::vector<StructuralLine> s_lines;
  std::vector<OrthonormalLine> orth_lines;
  std::vector<ResidualBlock> blocks;
  RobustLoss loss{1.0};
  int window_size = 10;

  int kf_index(int id) const {
    for (size_t i = 0; i < keyframes.size(); ++i) {
      if (keyframes[i].id == id) return static_cast<int>(i);
    }
    return -1;
  }
};

struct SolveOptions {
  int max_iterations = 50;
  double gradient_tol = 1e-10;
  double rel_cost_tol = 1e-8;
  double init_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e32;
  double min_inverse_depth = 1e-8;
};

enum class Termination {
  Gradient,
  RelativeCostDecrease,
  MaxIterations,
  Diverged,
  InvalidInput,
};

const char* termination_name(Termination t);

struct SolveReport {
  bool ok = false;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double wall_time = 0.0;  // seconds
  Termination reason = Termination::InvalidInput;
  int offending_block = -1;  // set when the initial state is not evaluable
  std::string message;
};

SolveReport solve(SlidingWindowProblem& problem, const SolveOptions& options = {});

}  // namespace linevio
