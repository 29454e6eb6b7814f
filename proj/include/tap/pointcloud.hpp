#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tap/geometry.hpp"

namespace tap {

// Object-frame point cloud. Coordinates are kept float-representable so the
// 32-bit on-disk format round-trips bit-for-bit.
struct PointCloud {
  std::vector<Vec3> points;
  int label = -1;  // category id, -1 when unlabeled
  std::string id;

  std::size_t size() const { return points.size(); }
};

// Centroid to the origin, max radius to 1. A cloud with zero radius is only
// centered; no division happens.
PointCloud normalize_cloud(const PointCloud& p);

// Rounds every coordinate through 32-bit float precision.
PointCloud snap_to_float(const PointCloud& p);

// Binary format: magic "TAPC", version u16, point count u32, then N
// little-endian float32 (x, y, z) triples.
void save_cloud(const PointCloud& p, const std::filesystem::path& path);
PointCloud load_cloud(const std::filesystem::path& path);

}  // namespace tap
