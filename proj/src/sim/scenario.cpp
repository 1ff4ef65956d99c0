#include "linevio/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace linevio {

namespace {

Vec3 rotate_about_center(const Vec3& p, const Vec3& center, double yaw) {
  return center + rot_z(yaw) * (p - center);
}

// Random point on one of the four walls (0: y=0, 1: y=ry, 2: x=0, 3: x=rx).
Vec3 wall_point(int wall, const RoomSceneConfig& c, double a, double b) {
  switch (wall) {
    case 0: return Vec3(a * c.room_x, 0.0, b * c.room_z);
    case 1: return Vec3(a * c.room_x, c.room_y, b * c.room_z);
    case 2: return Vec3(0.0, a * c.room_y, b * c.room_z);
    default: return Vec3(c.room_x, a * c.room_y, b * c.room_z);
  }
}

}  // namespace

std::vector<LineLandmark3D> generate_room_scene(const RoomSceneConfig& config,
                                                uint64_t seed) {
  std::vector<LineLandmark3D> lines;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double rx = config.room_x, ry = config.room_y, rz = config.room_z;

  auto add = [&lines](const Vec3& s, const Vec3& e, bool structural, Axis axis) {
    LineLandmark3D l;
    l.id = static_cast<int>(lines.size());
    l.seg = Segment3D{s, e};
    l.structural = structural;
    l.axis = axis;
    lines.push_back(l);
  };

  // Box edges: 4 vertical, 4 along X, 4 along Y.
  add({0, 0, 0}, {0, 0, rz}, true, Axis::Z);
  add({rx, 0, 0}, {rx, 0, rz}, true, Axis::Z);
  add({0, ry, 0}, {0, ry, rz}, true, Axis::Z);
  add({rx, ry, 0}, {rx, ry, rz}, true, Axis::Z);
  add({0, 0, 0}, {rx, 0, 0}, true, Axis::X);
  add({0, ry, 0}, {rx, ry, 0}, true, Axis::X);
  add({0, 0, rz}, {rx, 0, rz}, true, Axis::X);
  add({0, ry, rz}, {rx, ry, rz}, true, Axis::X);
  add({0, 0, 0}, {0, ry, 0}, true, Axis::Y);
  add({rx, 0, 0}, {rx, ry, 0}, true, Axis::Y);
  add({0, 0, rz}, {0, ry, rz}, true, Axis::Y);
  add({rx, 0, rz}, {rx, ry, rz}, true, Axis::Y);

  const int n_total = std::max(config.n_lines, 12);
  const int n_oblique = static_cast<int>(
      std::round(config.oblique_fraction * static_cast<double>(n_total)));
  const int n_filler = n_total - 12 - n_oblique;

  int axis_cycle = 0;
  std::vector<size_t> second_block_candidates;
  for (int k = 0; k < n_filler; ++k) {
    const Axis axis = static_cast<Axis>(axis_cycle % 3);
    ++axis_cycle;
    if (axis == Axis::Z) {
      const int wall = rng.uniform_int(0, 3);
      const double a = rng.uniform(0.08, 0.92);
      const double zl = rng.uniform(0.05, 0.25);
      const double zh = rng.uniform(0.75, 0.97);
      add(wall_point(wall, config, a, zl), wall_point(wall, config, a, zh),
          true, Axis::Z);
    } else if (axis == Axis::X) {
      const int wall = rng.uniform_int(0, 1);  // y = 0 or y = ry walls
      const double z0 = rng.uniform(0.1, 0.9);
      const double x0 = rng.uniform(0.03, 0.55);
      const double x1 = std::min(x0 + rng.uniform(0.15, 0.42), 0.97);
      add(wall_point(wall, config, x0, z0), wall_point(wall, config, x1, z0),
          true, Axis::X);
    } else {
      const int wall = 2 + rng.uniform_int(0, 1);  // x = 0 or x = rx walls
      const double z0 = rng.uniform(0.1, 0.9);
      const double y0 = rng.uniform(0.03, 0.55);
      const double y1 = std::min(y0 + rng.uniform(0.15, 0.42), 0.97);
      add(wall_point(wall, config, y0, z0), wall_point(wall, config, y1, z0),
          true, Axis::Y);
    }
    if (lines.back().axis != Axis::Z) {
      second_block_candidates.push_back(lines.size() - 1);
    }
  }

  for (int k = 0; k < n_oblique; ++k) {
    const int wall = rng.uniform_int(0, 3);
    while (true) {
      const Vec3 a = wall_point(wall, config, rng.uniform(0.05, 0.95),
                                rng.uniform(0.08, 0.92));
      const Vec3 b = wall_point(wall, config, rng.uniform(0.05, 0.95),
                                rng.uniform(0.08, 0.92));
      const double len = (b - a).norm();
      if (len < 1.2 || len > 4.5) continue;
      const Vec3 dir = (b - a).normalized();
      const double to_axis =
          std::min({folded_angle(dir, Vec3::UnitX()),
                    folded_angle(dir, Vec3::UnitY()),
                    folded_angle(dir, Vec3::UnitZ())});
      if (to_axis < deg2rad(8.0)) continue;  // keep obliques clearly oblique
      add(a, b, false, Axis::Z);
      break;
    }
  }

  if (config.second_block_yaw_deg >= 0.0 && !second_block_candidates.empty()) {
    const double yaw = deg2rad(config.second_block_yaw_deg);
    const Vec3 center(rx / 2.0, ry / 2.0, 0.0);
    const size_t n_rotate = static_cast<size_t>(
        config.second_block_fraction *
        static_cast<double>(second_block_candidates.size()));
    for (size_t i = 0; i < n_rotate; ++i) {
      LineLandmark3D& l = lines[second_block_candidates[i]];
      l.seg.s = rotate_about_center(l.seg.s, center, yaw);
      l.seg.e = rotate_about_center(l.seg.e, center, yaw);
    }
  }

  return lines;
}

std::vector<PointLandmark3D> generate_room_points(const RoomSceneConfig& config,
                                                  int n_points, uint64_t seed) {
  std::vector<PointLandmark3D> pts;
  Rng rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
  const double rx = config.room_x, ry = config.room_y, rz = config.room_z;
  for (double x : {0.0, rx}) {
    for (double y : {0.0, ry}) {
      for (double z : {0.0, rz}) {
        pts.push_back({static_cast<int>(pts.size()), Vec3(x, y, z)});
      }
    }
  }
  while (static_cast<int>(pts.size()) < n_points) {
    const int wall = rng.uniform_int(0, 3);
    const Vec3 p = wall_point(wall, config, rng.uniform(0.03, 0.97),
                              rng.uniform(0.05, 0.95));
    pts.push_back({static_cast<int>(pts.size()), p});
  }
  return pts;
}

std::vector<TimedPose> generate_trajectory(int n_poses, uint64_t seed,
                                           const RoomSceneConfig& room) {
  std::vector<TimedPose> poses;
  Rng rng(seed ^ 0xa0761d6478bd642fULL);
  const double cx = room.room_x / 2.0;
  const double cy = room.room_y / 2.0;
  const double radius = 0.32 * std::min(room.room_x, room.room_y);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double z_phase = rng.uniform(0.0, 2.0 * kPi);
  const double base_z = 0.4 * room.room_z;

  for (int i = 0; i < n_poses; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n_poses);
    const double ang = 2.0 * kPi * u + phase;
    TimedPose tp;
    tp.t = 0.1 * static_cast<double>(i);
    tp.T_w_c.p = Vec3(cx + radius * std::cos(ang), cy + radius * std::sin(ang),
                      base_z + 0.06 * room.room_z * std::sin(2.0 * ang + z_phase));
    // Yaw tracks the tangent; small pitch oscillation.
    const Vec2 tangent(-std::sin(ang), std::cos(ang));
    const double pitch = 0.05 * std::sin(3.0 * ang);
    const Vec3 forward(tangent.x() * std::cos(pitch),
                       tangent.y() * std::cos(pitch), std::sin(pitch));
    const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
    const Vec3 down = forward.cross(right);
    tp.T_w_c.R.col(0) = right;
    tp.T_w_c.R.col(1) = down;
    tp.T_w_c.R.col(2) = forward;
    poses.push_back(tp);
  }
  return poses;
}

Scenario make_default_scenario(uint64_t seed, double noise_sigma_px,
                               const RoomSceneConfig& config, int n_poses) {
  Scenario s;
  s.camera = CameraModel{};
  s.seed = seed;
  s.noise_sigma_px = noise_sigma_px;
  s.lines = generate_room_scene(config, seed);
  s.points = generate_room_points(config, config.n_points, seed);
  s.poses = generate_trajectory(n_poses, seed, config);
  return s;
}

namespace {

// Liang-Barsky clipping of a pixel-space segment to the image rectangle.
bool clip_to_rect(Vec2& a, Vec2& b, double w, double h) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x(), w - a.x(), a.y(), h - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (std::abs(p[i]) < 1e-15) {
      if (q[i] < 0.0) return false;
    } else {
      const double r = q[i] / p[i];
      if (p[i] < 0.0) {
        t0 = std::max(t0, r);
      } else {
        t1 = std::min(t1, r);
      }
    }
  }
  if (t0 >= t1) return false;
  const Vec2 a0 = a;
  a = a0 + t0 * d;
  b = a0 + t1 * d;
  return true;
}

}  // namespace

std::optional<Segment2D> project_line(const Pose& T_w_c,
                                      const CameraModel& camera,
                                      const Segment3D& line_w,
                                      double min_len_px) {
  constexpr double kNear = 0.05;
  const Pose T_c_w = T_w_c.inverse();
  Vec3 a = T_c_w * line_w.s;
  Vec3 b = T_c_w * line_w.e;
  if (a.z() < kNear && b.z() < kNear) return std::nullopt;
  if (a.z() < kNear || b.z() < kNear) {
    const double t = (kNear - a.z()) / (b.z() - a.z());
    const Vec3 cut = a + t * (b - a);
    if (a.z() < kNear) {
      a = cut;
    } else {
      b = cut;
    }
  }
  Vec2 pa = camera.to_pixel(a);
  Vec2 pb = camera.to_pixel(b);
  if (!clip_to_rect(pa, pb, camera.width - 1.0, camera.height - 1.0)) {
    return std::nullopt;
  }
  if ((pb - pa).norm() < min_len_px) return std::nullopt;
  return Segment2D{camera.to_normalized(pa), camera.to_normalized(pb)};
}

std::optional<Vec2> project_point(const Pose& T_w_c, const CameraModel& camera,
                                  const Vec3& p_w) {
  constexpr double kNear = 0.05;
  const Vec3 pc = T_w_c.inverse() * p_w;
  if (pc.z() < kNear) return std::nullopt;
  const Vec2 px = camera.to_pixel(pc);
  if (px.x() < 0.0 || px.y() < 0.0 || px.x() > camera.width - 1.0 ||
      px.y() > camera.height - 1.0) {
    return std::nullopt;
  }
  return Vec2(pc.x() / pc.z(), pc.y() / pc.z());
}

Segment2D add_pixel_noise(const Segment2D& seg, double sigma_px,
                          const CameraModel& camera, Rng& rng) {
  if (sigma_px <= 0.0) return seg;
  Segment2D out = seg;
  out.s.x() += rng.gauss() * sigma_px / camera.fx;
  out.s.y() += rng.gauss() * sigma_px / camera.fy;
  out.e.x() += rng.gauss() * sigma_px / camera.fx;
  out.e.y() += rng.gauss() * sigma_px / camera.fy;
  return out;
}

std::vector<FrameObservations> make_observations(const Scenario& scenario) {
  std::vector<FrameObservations> out;
  out.reserve(scenario.poses.size());
  Rng rng(scenario.seed * 0x9ddfea08eb382d69ULL + 0x123456789ULL);
  for (size_t i = 0; i < scenario.poses.size(); ++i) {
    FrameObservations fo;
    fo.keyframe_id = static_cast<int>(i);
    for (const auto& line : scenario.lines) {
      const auto proj =
          project_line(scenario.poses[i].T_w_c, scenario.camera, line.seg);
      if (!proj) continue;
      LineObservation lo;
      lo.line_id = line.id;
      lo.structural_gt = line.structural;
      lo.axis_gt = line.axis;
      lo.seg = add_pixel_noise(*proj, scenario.noise_sigma_px, scenario.camera,
                               rng);
      fo.lines.push_back(lo);
    }
    for (const auto& pt : scenario.points) {
      const auto proj =
          project_point(scenario.poses[i].T_w_c, scenario.camera, pt.p);
      if (!proj) continue;
      PointObservation po;
      po.point_id = pt.id;
      po.uv = *proj;
      if (scenario.noise_sigma_px > 0.0) {
        po.uv.x() += rng.gauss() * scenario.noise_sigma_px / scenario.camera.fx;
        po.uv.y() += rng.gauss() * scenario.noise_sigma_px / scenario.camera.fy;
      }
      fo.points.push_back(po);
    }
    out.push_back(std::move(fo));
  }
  return out;
}

namespace {

using nlohmann::json;

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_to_vec3(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(),
              j.at(2).get<double>());
}

Axis axis_from_string(const std::string& s) {
  if (s == "X") return Axis::X;
  if (s == "Y") return Axis::Y;
  return Axis::Z;
}

}  // namespace

bool save_scenario(const Scenario& scenario, const std::string& path) {
  json j;
  j["camera"] = {{"fx", scenario.camera.fx}, {"fy", scenario.camera.fy},
                 {"cx", scenario.camera.cx}, {"cy", scenario.camera.cy},
                 {"width", scenario.camera.width},
                 {"height", scenario.camera.height}};
  j["noise_sigma_px"] = scenario.noise_sigma_px;
  j["seed"] = scenario.seed;
  j["lines"] = json::array();
  for (const auto& l : scenario.lines) {
    j["lines"].push_back({{"id", l.id},
                          {"label", l.structural ? "structural" : "oblique"},
                          {"axis", l.structural ? axis_name(l.axis) : "-"},
                          {"s", vec3_to_json(l.seg.s)},
                          {"e", vec3_to_json(l.seg.e)}});
  }
  j["points"] = json::array();
  for (const auto& p : scenario.points) {
    j["points"].push_back({{"id", p.id}, {"p", vec3_to_json(p.p)}});
  }
  j["poses"] = json::array();
  for (const auto& tp : scenario.poses) {
    const Eigen::Quaterniond q(tp.T_w_c.R);
    j["poses"].push_back(
        {{"t", tp.t},
         {"q", json::array({q.x(), q.y(), q.z(), q.w()})},
         {"p", vec3_to_json(tp.T_w_c.p)}});
  }
  std::ofstream out(path);
  if (!out) return false;
  out << j.dump(1) << "\n";
  return static_cast<bool>(out);
}

std::optional<Scenario> load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
    Scenario s;
    const auto& cam = j.at("camera");
    s.camera.fx = cam.at("fx").get<double>();
    s.camera.fy = cam.at("fy").get<double>();
    s.camera.cx = cam.at("cx").get<double>();
    s.camera.cy = cam.at("cy").get<double>();
    s.camera.width = cam.at("width").get<int>();
    s.camera.height = cam.at("height").get<int>();
    s.noise_sigma_px = j.at("noise_sigma_px").get<double>();
    s.seed = j.at("seed").get<uint64_t>();
    for (const auto& jl : j.at("lines")) {
      LineLandmark3D l;
      l.id = jl.at("id").get<int>();
      l.structural = jl.at("label").get<std::string>() == "structural";
      l.axis = axis_from_string(jl.at("axis").get<std::string>());
      l.seg.s = json_to_vec3(jl.at("s"));
      l.seg.e = json_to_vec3(jl.at("e"));
      s.lines.push_back(l);
    }
    for (const auto& jp : j.at("points")) {
      s.points.push_back(
          {jp.at("id").get<int>(), json_to_vec3(jp.at("p"))});
    }
    for (const auto& jp : j.at("poses")) {
      TimedPose tp;
      tp.t = jp.at("t").get<double>();
      const auto& q = jp.at("q");
      tp.T_w_c.R = Eigen::Quaterniond(q.at(3).get<double>(), q.at(0).get<double>(),
                                      q.at(1).get<double>(), q.at(2).get<double>())
                       .toRotationMatrix();
      tp.T_w_c.p = json_to_vec3(jp.at("p"));
      s.poses.push_back(tp);
    }
    return s;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

bool write_observations_csv(const std::vector<FrameObservations>& obs,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) return false;
  out << "frame_id,line_id,label,us,vs,ue,ve\n";
  char buf[256];
  for (const auto& fo : obs) {
    for (const auto& lo : fo.lines) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%s,%.6g,%.6g,%.6g,%.6g\n",
                    fo.keyframe_id, lo.line_id,
                    lo.structural_gt ? axis_name(lo.axis_gt) : "N",
                    lo.seg.s.x(), lo.seg.s.y(), lo.seg.e.x(), lo.seg.e.y());
      out << buf;
    }
  }
  return static_cast<bool>(out);
}

bool write_point_observations_csv(const std::vector<FrameObservations>& obs,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) return false;
  out << "frame_id,point_id,u,v\n";
  char buf[128];
  for (const auto& fo : obs) {
    for (const auto& po : fo.points) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.6g,%.6g\n", fo.keyframe_id,
                    po.point_id, po.uv.x(), po.uv.y());
      out << buf;
    }
  }
  return static_cast<bool>(out);
}

}  // namespace linevio
