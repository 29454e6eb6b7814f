#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tap/errors.hpp"

namespace tap {

// H x W x 3 image with values in [0, 1]. Background pixels are exactly
// white; the foreground mask marks any pixel with a channel below
// 1 - 1/255.
struct ViewImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;        // H*W*3, row-major, RGB
  std::vector<std::uint8_t> fg_mask;  // H*W, 1 = foreground

  static ViewImage white(int h, int w);

  double& at(int y, int x, int c) {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  double at(int y, int x, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  bool foreground(int y, int x) const {
    return fg_mask[static_cast<std::size_t>(y * width + x)] != 0;
  }

  // Rebuilds fg_mask from the pixel values.
  void recompute_mask();
  std::size_t foreground_count() const;
};

inline constexpr double kBackgroundThreshold = 1.0 - 1.0 / 255.0;

// Binary PPM ("P6", maxval 255), row-major from the top-left corner.
void save_image(const ViewImage& img, const std::filesystem::path& path);
ViewImage load_image(const std::filesystem::path& path);

}  // namespace tap
