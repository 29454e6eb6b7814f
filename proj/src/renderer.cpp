#include "tap/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tap {

int default_splat_radius(int height, int width) {
  const double scaled = 2.0 * static_cast<double>(std::min(height, width)) / 224.0;
  return std::max(1, static_cast<int>(std::lround(scaled)));
}

ViewImage render(const PointCloud& cloud, const Pose& pose, int height, int width,
                 int splat_radius) {
  if (cloud.points.empty()) throw DataError("render: empty point cloud");
  if (height < 8 || width < 8) throw ContractError("render: resolution must be at least 8x8");
  if (splat_radius < 0) throw ContractError("render: splat_radius must be >= 0");

  const std::vector<Vec3> rotated = rotate_points(cloud.points, pose);
  const ProjectionParams pp = fit_projection(rotated, height, width, kRenderMargin);
  const std::vector<GridPoint> proj = project_to_grid(rotated, pp);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> zbuf(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), inf);

  const double r = static_cast<double>(splat_radius);
  const double r2 = r * r;
  for (const GridPoint& gp : proj) {
    const int y0 = std::max(0, static_cast<int>(std::ceil(gp.u - r)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(gp.u + r)));
    const int x0 = std::max(0, static_cast<int>(std::ceil(gp.v - r)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(gp.v + r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dy = static_cast<double>(y) - gp.u;
        const double dx = static_cast<double>(x) - gp.v;
        if (dy * dy + dx * dx > r2) continue;
        double& z = zbuf[static_cast<std::size_t>(y * width + x)];
        if (gp.depth < z) z = gp.depth;
      }
  }

  double zmin = inf, zmax = -inf;
  for (double z : zbuf)
    if (z != inf) {
      zmin = std::min(zmin, z);
      zmax = std::max(zmax, z);
    }

  ViewImage img = ViewImage::white(height, width);
  const double span = zmax - zmin;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double z = zbuf[static_cast<std::size_t>(y * width + x)];
      if (z == inf) continue;
      const double t = span > 0.0 ? (z - zmin) / span : 0.5;
      const double shade = kShadeBase + kShadeSpan * t;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = shade;
      img.fg_mask[static_cast<std::size_t>(y * width + x)] = 1;
    }
  return img;
}

}  // namespace tap
