#pragma once

#include "tap/geometry.hpp"
#include "tap/image.hpp"
#include "tap/pointcloud.hpp"

namespace tap {

inline constexpr double kRenderMargin = 0.1;
inline constexpr double kShadeBase = 0.15;
inline constexpr double kShadeSpan = 0.7;

// Splat radius 2 at 224x224, scaled proportionally, never below 1.
int default_splat_radius(int height, int width);

// Z-buffered point-splat rendering under the parallel projection of the
// geometry module. Each point covers a disc of `splat_radius` pixels; the
// nearest depth wins (earliest point on exact ties). Covered pixels are
// shaded by normalized depth (near = dark), untouched pixels stay white.
ViewImage render(const PointCloud& cloud, const Pose& pose, int height, int width,
                 int splat_radius);

}  // namespace tap
