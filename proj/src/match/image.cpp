#include "linevio/match/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace linevio {

double ImageGrid::bilinear(double x, double y) const {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = at(std::max(x0, 0), std::max(y0, 0));
  const double v10 = at(x1, std::max(y0, 0));
  const double v01 = at(std::max(x0, 0), y1);
  const double v11 = at(x1, y1);
  return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 +
         (1 - fx) * fy * v01 + fx * fy * v11;
}

ImageGrid make_image(int width, int height, const CameraModel& camera) {
  ImageGrid img;
  img.width = width;
  img.height = height;
  img.camera = camera;
  img.intensities.assign(static_cast<size_t>(width) * height, 0.0f);
  return img;
}

bool write_pgm(const ImageGrid& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(img.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double v = std::clamp(static_cast<double>(img.at(x, y)), 0.0, 1.0);
      row[static_cast<size_t>(x)] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  return static_cast<bool>(out);
}

std::optional<ImageGrid> read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string magic;
  in >> magic;
  if (magic != "P5") return std::nullopt;
  auto skip_ws_and_comments = [&in]() {
    while (true) {
      const int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
  };
  int w = 0, h = 0, maxval = 0;
  skip_ws_and_comments();
  in >> w;
  skip_ws_and_comments();
  in >> h;
  skip_ws_and_comments();
  in >> maxval;
  in.get();  // single whitespace after maxval
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) return std::nullopt;
  ImageGrid img = make_image(w, h, CameraModel{});
  std::vector<unsigned char> buf(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!in) return std::nullopt;
  for (size_t i = 0; i < buf.size(); ++i) {
    img.intensities[i] = static_cast<float>(buf[i]) / static_cast<float>(maxval);
  }
  return img;
}

std::optional<std::vector<double>> extract_patch(const ImageGrid& img,
                                                 const Vec2& center_px,
                                                 int half) {
  if (!img.contains(center_px.x(), center_px.y(), half + 1.0)) {
    return std::nullopt;
  }
  std::vector<double> patch;
  patch.reserve(static_cast<size_t>(2 * half + 1) * (2 * half + 1));
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      patch.push_back(img.bilinear(center_px.x() + dx, center_px.y() + dy));
    }
  }
  return patch;
}

namespace {
double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace

std::optional<double> zmssd(const std::vector<double>& a,
                            const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return std::nullopt;
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - ma) - (b[i] - mb);
    s += d * d;
  }
  return s;
}

std::optional<double> zncc(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return std::nullopt;
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa < 1e-12 || sbb < 1e-12) return std::nullopt;  // flat patch
  return sab / std::sqrt(saa * sbb);
}

}  // namespace linevio
