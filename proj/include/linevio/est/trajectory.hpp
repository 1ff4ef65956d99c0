#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linevio/sim/scenario.hpp"

namespace linevio {

// TUM format: "timestamp tx ty tz qx qy qz qw" per line, world-from-camera.
bool write_tum(const std::vector<TimedPose>& trajectory,
               const std::string& path);
std::optional<std::vector<TimedPose>> read_tum(const std::string& path);

struct ApeResult {
  double trans_rmse_cm = 0.0;
  double rot_rmse_deg = 0.0;
  int matched_poses = 0;
};

// Absolute pose error after timestamp association (tolerance seconds). When
// align is set, a rigid SE(3) transform fitted on the translations is applied
// to the estimate first.
std::optional<ApeResult> evaluate_ape(const std::vector<TimedPose>& estimate,
                                      const std::vector<TimedPose>& ground_truth,
                                      bool align = false,
                                      double time_tolerance = 0.01);

}  // namespace linevio
