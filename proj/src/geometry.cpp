#include "tap/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace tap {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kPoseTol = 1e-9;
constexpr double kMinGridSize = 1e-9;
}  // namespace

Mat3 Mat3::identity() {
  Mat3 r;
  r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  return r;
}

Mat3 Mat3::rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return r;
}

Mat3 Mat3::rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return r;
}

Mat3 Mat3::rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

Mat3 Mat3::mul(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

Vec3 Mat3::apply(const Vec3& v) const {
  return {(*this)(0, 0) * v[0] + (*this)(0, 1) * v[1] + (*this)(0, 2) * v[2],
          (*this)(1, 0) * v[0] + (*this)(1, 1) * v[1] + (*this)(1, 2) * v[2],
          (*this)(2, 0) * v[0] + (*this)(2, 1) * v[1] + (*this)(2, 2) * v[2]};
}

double Mat3::det() const {
  const Mat3& a = *this;
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

Pose::Pose(const Mat3& rot) : r(rot) {
  if (orthonormality_error() > kPoseTol)
    throw PoseError("pose matrix is not orthonormal within 1e-9");
  if (std::abs(r.det() - 1.0) > kPoseTol)
    throw PoseError("pose matrix determinant is not +1 within 1e-9");
}

double Pose::orthonormality_error() const {
  const Mat3 g = r.transposed().mul(r);
  double err = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return err;
}

std::vector<Vec3> rotate_points(const std::vector<Vec3>& pts, const Pose& pose) {
  std::vector<Vec3> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = pose.r.apply(pts[i]);
  return out;
}

ProjectionParams fit_projection(const std::vector<Vec3>& rotated, int h, int w, double margin) {
  if (rotated.empty()) throw DataError("fit_projection: empty point cloud");
  if (h < 2 || w < 2) throw ContractError("fit_projection: grid must be at least 2x2");
  if (margin < 0.0 || margin >= 0.5) throw ContractError("fit_projection: margin must be in [0, 0.5)");

  double xmin = rotated[0][0], xmax = rotated[0][0];
  double ymin = rotated[0][1], ymax = rotated[0][1];
  for (const Vec3& p : rotated) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const double ext_x = xmax - xmin;
  const double ext_y = ymax - ymin;

  ProjectionParams pp;
  pp.h = h;
  pp.w = w;
  pp.margin = margin;
  pp.x0 = xmin;
  pp.y0 = ymin;
  const double usable = (static_cast<double>(std::min(h, w)) - 1.0) * (1.0 - 2.0 * margin);
  pp.g = std::max(std::max(ext_x, ext_y) / usable, kMinGridSize);
  // Center the projected bounding box on the grid.
  pp.o_h = (static_cast<double>(h) - 1.0) / 2.0 - ext_x / (2.0 * pp.g);
  pp.o_w = (static_cast<double>(w) - 1.0) / 2.0 - ext_y / (2.0 * pp.g);
  return pp;
}

std::vector<GridPoint> project_to_grid(const std::vector<Vec3>& rotated,
                                       const ProjectionParams& pp) {
  std::vector<GridPoint> out(rotated.size());
  for (std::size_t i = 0; i < rotated.size(); ++i) {
    out[i].u = (rotated[i][0] - pp.x0) / pp.g + pp.o_h;
    out[i].v = (rotated[i][1] - pp.y0) / pp.g + pp.o_w;
    out[i].depth = rotated[i][2];
  }
  return out;
}

OpticalLine optical_line(const Pose& pose, const ProjectionParams& pp, int u, int v) {
  if (u < 0 || u > pp.h - 1 || v < 0 || v > pp.w - 1)
    throw ContractError("optical_line: grid cell (" + std::to_string(u) + "," + std::to_string(v) +
                        ") outside " + std::to_string(pp.h) + "x" + std::to_string(pp.w));
  const Mat3 a = pose.r.transposed();  // R^{-1} for a valid pose
  const double psi_h = pp.g * (static_cast<double>(u) - pp.o_h) + pp.x0;
  const double psi_w = pp.g * (static_cast<double>(v) - pp.o_w) + pp.y0;

  OpticalLine line;
  // Origin is the point of the line at z' = 0.
  line.origin = a.apply({psi_h, psi_w, 0.0});
  Vec3 d = {a(0, 2), a(1, 2), a(2, 2)};
  const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  line.direction = {d[0] / norm, d[1] / norm, d[2] / norm};
  line.grid_u = static_cast<double>(u) / static_cast<double>(pp.h);
  line.grid_v = static_cast<double>(v) / static_cast<double>(pp.w);
  return line;
}

std::vector<Pose> sample_poses(int count, double elevation_deg) {
  if (count < 1) throw ContractError("sample_poses: count must be >= 1");
  const double elev = elevation_deg * kPi / 180.0;
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(count));
  const Mat3 tilt = Mat3::rot_x(-elev);
  for (int k = 0; k < count; ++k) {
    const double azim = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(count);
    poses.emplace_back(tilt.mul(Mat3::rot_z(azim)));
  }
  return poses;
}

}  // namespace tap
