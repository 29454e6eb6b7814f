#pragma once

#include <array>
#include <vector>

#include "tap/errors.hpp"

namespace tap {

using Vec3 = std::array<double, 3>;

// Row-major 3x3 matrix, just enough linear algebra for pose handling.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity();
  static Mat3 rot_x(double radians);
  static Mat3 rot_y(double radians);
  static Mat3 rot_z(double radians);

  double operator()(int i, int j) const { return m[static_cast<std::size_t>(i * 3 + j)]; }
  double& operator()(int i, int j) { return m[static_cast<std::size_t>(i * 3 + j)]; }

  Mat3 mul(const Mat3& o) const;
  Mat3 transposed() const;
  Vec3 apply(const Vec3& v) const;
  double det() const;
};

// Rotation applied to the object before parallel projection. Must be a
// proper rotation: R^T R = I and det(R) = +1.
struct Pose {
  Mat3 r;

  explicit Pose(const Mat3& rot);
  static Pose identity() { return Pose(Mat3::identity()); }

  // Largest absolute deviation of R^T R from the identity.
  double orthonormality_error() const;
};

// Per-(cloud, pose) parallel projection onto an h x w grid.
// Forward map: u = (x' - x0)/g + o_h, v = (y' - y0)/g + o_w.
// Inverse used for line tracing: x' = g*(u - o_h) + x0 (and likewise y').
struct ProjectionParams {
  int h = 0, w = 0;
  double g = 0.0;        // scene units per grid cell, shared for both axes
  double o_h = 0.0, o_w = 0.0;
  double x0 = 0.0, y0 = 0.0;
  double margin = 0.0;
};

// Line of 3D points that all land on grid cell (u, v): origin + t * direction.
struct OpticalLine {
  Vec3 origin{};
  Vec3 direction{};            // unit length
  double grid_u = 0.0, grid_v = 0.0;  // normalized position (u/h, v/w)
};

struct GridPoint {
  double u = 0.0, v = 0.0, depth = 0.0;
};

// x' = R x per point. Throws PoseError if R is not orthonormal (1e-9).
std::vector<Vec3> rotate_points(const std::vector<Vec3>& pts, const Pose& pose);

// Fits grid size and centering offsets so all rotated points project inside
// [0, h-1] x [0, w-1] with the requested border margin.
ProjectionParams fit_projection(const std::vector<Vec3>& rotated, int h, int w, double margin);

std::vector<GridPoint> project_to_grid(const std::vector<Vec3>& rotated,
                                       const ProjectionParams& pp);

// Traces grid cell (u, v) back to its line of 3D points under `pose`.
OpticalLine optical_line(const Pose& pose, const ProjectionParams& pp, int u, int v);

// `count` poses at evenly spaced azimuths and a fixed elevation.
std::vector<Pose> sample_poses(int count, double elevation_deg);

}  // namespace tap
