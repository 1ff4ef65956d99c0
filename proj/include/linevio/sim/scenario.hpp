#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linevio/core/camera.hpp"
#include "linevio/core/pose.hpp"
#include "linevio/core/rng.hpp"
#include "linevio/core/segment.hpp"
#include "linevio/lines/manhattan.hpp"
#include "linevio/match/image.hpp"

namespace linevio {

struct LineLandmark3D {
  int id = -1;
  Segment3D seg;  // world frame
  bool structural = false;
  Axis axis = Axis::Z;  // meaningful when structural
};

struct PointLandmark3D {
  int id = -1;
  Vec3 p = Vec3::Zero();
};

struct TimedPose {
  double t = 0.0;
  Pose T_w_c;  // world-from-camera
};

struct Scenario {
  CameraModel camera;
  std::vector<LineLandmark3D> lines;
  std::vector<PointLandmark3D> points;
  std::vector<TimedPose> poses;
  double noise_sigma_px = 0.0;
  uint64_t seed = 0;
};

struct LineObservation {
  int line_id = -1;
  bool structural_gt = false;
  Axis axis_gt = Axis::Z;
  Segment2D seg;  // normalized plane, noisy when the scenario says so
};

struct PointObservation {
  int point_id = -1;
  Vec2 uv = Vec2::Zero();  // normalized plane
};

struct FrameObservations {
  int keyframe_id = -1;
  std::vector<LineObservation> lines;
  std::vector<PointObservation> points;
};

struct RoomSceneConfig {
  int n_lines = 80;
  int n_points = 120;
  double oblique_fraction = 0.25;
  double room_x = 10.0;
  double room_y = 10.0;
  double room_z = 4.0;
  // When >= 0, a fraction of the structural lines belongs to a second
  // Manhattan block yawed by this many degrees.
  double second_block_yaw_deg = -1.0;
  double second_block_fraction = 0.3;
};

std::vector<LineLandmark3D> generate_room_scene(const RoomSceneConfig& config,
                                                uint64_t seed);

std::vector<PointLandmark3D> generate_room_points(const RoomSceneConfig& config,
                                                  int n_points, uint64_t seed);

// Smooth closed loop inside the room, yaw tracking the motion tangent,
// camera z forward and y down.
std::vector<TimedPose> generate_trajectory(int n_poses, uint64_t seed,
                                           const RoomSceneConfig& room = {});

Scenario make_default_scenario(uint64_t seed, double noise_sigma_px,
                               const RoomSceneConfig& config = {},
                               int n_poses = 600);

// Projects, clips against the near plane and image bounds, and drops
// segments shorter than min_len_px. Normalized-plane output.
std::optional<Segment2D> project_line(const Pose& T_w_c,
                                      const CameraModel& camera,
                                      const Segment3D& line_w,
                                      double min_len_px = 15.0);

std::optional<Vec2> project_point(const Pose& T_w_c, const CameraModel& camera,
                                  const Vec3& p_w);

// Isotropic Gaussian endpoint perturbation, sigma in pixels, applied on the
// normalized plane through (fx, fy).
Segment2D add_pixel_noise(const Segment2D& seg, double sigma_px,
                          const CameraModel& camera, Rng& rng);

std::vector<FrameObservations> make_observations(const Scenario& scenario);

// Renders the ground-truth lines visible in one frame over a deterministic
// textured background (substrate for the patch matchers).
ImageGrid render_frame(const Scenario& scenario, int frame_idx);

bool save_scenario(const Scenario& scenario, const std::string& path);
std::optional<Scenario> load_scenario(const std::string& path);

bool write_observations_csv(const std::vector<FrameObservations>& obs,
                            const std::string& path);
bool write_point_observations_csv(const std::vector<FrameObservations>& obs,
                                  const std::string& path);

}  // namespace linevio
