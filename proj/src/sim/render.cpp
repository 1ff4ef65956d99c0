#include <algorithm>
#include <cmath>
#include <cstdint>

#include "linevio/sim/scenario.hpp"

namespace linevio {

namespace {

// Deterministic per-pixel hash noise in [-1, 1).
double hash_noise(int x, int y) {
  uint32_t h = static_cast<uint32_t>(x) * 73856093u ^
               static_cast<uint32_t>(y) * 19349663u ^ 0x9e3779b9u;
  h ^= h >> 16;
  h *= 0x45d9f3bu;
  h ^= h >> 16;
  return static_cast<double>(h & 0xffffffu) / 8388608.0 - 1.0;
}

double background(int x, int y) {
  return 0.225 +
         0.09 * std::sin(0.043 * x + 2.0 * std::sin(0.011 * y)) +
         0.035 * hash_noise(x, y);
}

struct RasterLine {
  Vec2 s, e;
  int id;
};

void draw_line(ImageGrid& img, const RasterLine& line) {
  const Vec2 d = line.e - line.s;
  const double len = d.norm();
  if (len < 1e-9) return;
  const Vec2 u = d / len;
  const int x0 = std::max(0, static_cast<int>(std::floor(
                                 std::min(line.s.x(), line.e.x()) - 3.0)));
  const int x1 = std::min(img.width - 1,
                          static_cast<int>(std::ceil(
                              std::max(line.s.x(), line.e.x()) + 3.0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(
                                 std::min(line.s.y(), line.e.y()) - 3.0)));
  const int y1 = std::min(img.height - 1,
                          static_cast<int>(std::ceil(
                              std::max(line.s.y(), line.e.y()) + 3.0)));
  const double freq = 0.35 * (1.0 + 0.13 * static_cast<double>(line.id % 7));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(static_cast<double>(x), static_cast<double>(y));
      double t = (p - line.s).dot(u);
      t = std::clamp(t, 0.0, len);
      const Vec2 closest = line.s + t * u;
      const double dist = (p - closest).norm();
      if (dist > 2.0) continue;
      const double value =
          0.65 + 0.25 * std::sin(1.3 * static_cast<double>(line.id) + freq * t);
      const double w =
          dist <= 0.8 ? 1.0 : std::clamp((2.0 - dist) / 1.2, 0.0, 1.0);
      const double blended =
          static_cast<double>(img.at(x, y)) * (1.0 - w) + value * w;
      img.at(x, y) = static_cast<float>(
          std::max(static_cast<double>(img.at(x, y)), blended));
    }
  }
}

}  // namespace

ImageGrid render_frame(const Scenario& scenario, int frame_idx) {
  const CameraModel& cam = scenario.camera;
  ImageGrid img = make_image(cam.width, cam.height, cam);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      img.at(x, y) = static_cast<float>(background(x, y));
    }
  }
  const Pose& T_w_c = scenario.poses[static_cast<size_t>(frame_idx)].T_w_c;
  for (const auto& line : scenario.lines) {
    const auto proj = project_line(T_w_c, cam, line.seg, 3.0);
    if (!proj) continue;
    RasterLine rl;
    rl.s = cam.to_pixel(proj->s);
    rl.e = cam.to_pixel(proj->e);
    rl.id = line.id;
    draw_line(img, rl);
  }
  return img;
}

}  // namespace linevio
