#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linevio/core/camera.hpp"
#include "linevio/core/types.hpp"

namespace linevio {

// Grayscale raster, row-major intensities in [0, 1].
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<float> intensities;
  CameraModel camera;

  float at(int x, int y) const {
    return intensities[static_cast<size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return intensities[static_cast<size_t>(y) * width + x];
  }

  bool contains(double x, double y, double margin = 0.0) const {
    return x >= margin && y >= margin && x <= width - 1 - margin &&
           y <= height - 1 - margin;
  }

  double bilinear(double x, double y) const;
};

ImageGrid make_image(int width, int height, const CameraModel& camera);

// Plain binary PGM (P5, 8 bit) used for test fixtures.
bool write_pgm(const ImageGrid& img, const std::string& path);
std::optional<ImageGrid> read_pgm(const std::string& path);

// Square patch of side 2*half+1 sampled bilinearly around center (pixels);
// empty optional if any sample falls outside the image.
std::optional<std::vector<double>> extract_patch(const ImageGrid& img,
                                                 const Vec2& center_px,
                                                 int half);

// Zero-mean sum of squared differences; lower is better.
std::optional<double> zmssd(const std::vector<double>& a,
                            const std::vector<double>& b);

// Zero-normalized cross-correlation in [-1, 1]; higher is better.
std::optional<double> zncc(const std::vector<double>& a,
                           const std::vector<double>& b);

}  // namespace linevio
