#pragma once

#include <vector>

#include "linevio/est/problem.hpp"
#include "linevio/sim/scenario.hpp"

namespace linevio {

enum class LineRepr { NS2, Orth4 };

struct LineEstimate {
  int line_id = -1;
  bool ok = false;
  PluckerLine line_w;
  Segment3D endpoints_w;
};

struct RefinementOptions {
  double sigma_px = 1.5;          // whitening, pixels
  double min_parallax_deg = 1.0;  // triangulation pair selection
  // Pure Gaussian noise in this experiment; a wide Cauchy region keeps the
  // loss effectively quadratic for inliers.
  double cauchy_scale = 3.0;
  SolveOptions solve;
};

struct RefinementResult {
  std::vector<LineEstimate> lines;
  SolveReport report;
  int failed_triangulation = 0;
};

// The synthetic reconstruction experiment: every line treated with the chosen
// representation, triangulated and initialized from its first usable
// observation pair, then jointly refined with all poses fixed.
RefinementResult landmark_refinement(const Scenario& scenario,
                                     const std::vector<FrameObservations>& obs,
                                     LineRepr repr,
                                     const RefinementOptions& options = {});

struct ReconstructionError {
  double rmse_cm = 0.0;
  int evaluated = 0;
  int skipped = 0;
};

// RMSE of estimate-to-ground-truth endpoint distances, with the estimated
// infinite line trimmed against the ground-truth extent and endpoint pairing
// chosen by minimum total distance.
ReconstructionError reconstruction_error(
    const std::vector<LineEstimate>& estimates,
    const std::vector<LineLandmark3D>& ground_truth);

}  // namespace linevio
