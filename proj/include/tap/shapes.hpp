#pragma once

#include <cstdint>
#include <string>

#include "tap/pointcloud.hpp"

namespace tap {

enum class ShapeKind { sphere, cube, cylinder, torus, cone, pyramid, capsule, ellipsoid };

inline constexpr int kNumShapeKinds = 8;

const char* shape_kind_name(ShapeKind kind);
ShapeKind shape_kind_from_name(const std::string& name);  // ConfigError on unknown

// Samples n_points on the surface of the given parametric shape, then
// normalizes to the unit object frame. Bitwise deterministic per
// (kind, n_points, seed).
PointCloud gen_shape(ShapeKind kind, int n_points, std::uint64_t seed);

}  // namespace tap
