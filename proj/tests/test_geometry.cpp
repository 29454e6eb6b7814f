#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tap/geometry.hpp"
#include "tap/rng.hpp"

using namespace tap;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Pose random_pose(Rng& rng) {
  return Pose(Mat3::rot_x(rng.uniform(-kPi, kPi))
                  .mul(Mat3::rot_y(rng.uniform(-kPi / 2, kPi / 2)))
                  .mul(Mat3::rot_z(rng.uniform(-kPi, kPi))));
}

std::vector<Vec3> random_cloud(Rng& rng, int n) {
  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (auto& p : pts)
    p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return pts;
}

}  // namespace

TEST_CASE("rotate_points identity, quarter turn and composition") {
  std::vector<Vec3> pts = {{1, 0, 0}, {0, 2, 0}, {0.5, -0.25, 3}};

  auto same = rotate_points(pts, Pose::identity());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int c = 0; c < 3; ++c) CHECK(same[i][c] == pts[i][c]);

  auto turned = rotate_points({{1, 0, 0}}, Pose(Mat3::rot_z(kPi / 2)));
  CHECK(turned[0][0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(turned[0][1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(turned[0][2] == doctest::Approx(0.0).epsilon(1e-15));

  Rng rng(1);
  const Mat3 r1 = Mat3::rot_x(0.3).mul(Mat3::rot_z(1.1));
  const Mat3 r2 = Mat3::rot_y(-0.7).mul(Mat3::rot_z(0.4));
  auto once = rotate_points(pts, Pose(r2.mul(r1)));
  auto twice = rotate_points(rotate_points(pts, Pose(r1)), Pose(r2));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(once[i][c] - twice[i][c]) < 1e-12);
}

TEST_CASE("rotate_points rejects a non-orthonormal matrix") {
  Mat3 bad = Mat3::identity();
  bad(0, 0) = 1.5;
  CHECK_THROWS_AS(Pose{bad}, PoseError);
}

TEST_CASE("rotate_points preserves pairwise distances") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_cloud(rng, 16);
    auto rot = rotate_points(pts, random_pose(rng));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        auto d = [](const Vec3& a, const Vec3& b) {
          return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                           (a[2] - b[2]) * (a[2] - b[2]));
        };
        CHECK(std::abs(d(pts[i], pts[j]) - d(rot[i], rot[j])) < 1e-9);
      }
  }
}

TEST_CASE("fit_projection matches direct arithmetic on the unit square") {
  std::vector<Vec3> square = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  auto pp = fit_projection(square, 8, 8, 0.0);
  CHECK(pp.g == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(pp.o_h == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pp.o_w == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pp.x0 == 0.0);
  CHECK(pp.y0 == 0.0);
}

TEST_CASE("fit_projection clamps the degenerate single point to the grid center") {
  std::vector<Vec3> one = {{0.3, -0.2, 0.9}};
  auto pp = fit_projection(one, 9, 9, 0.1);
  CHECK(pp.g == 1e-9);
  auto gp = project_to_grid(one, pp);
  CHECK(gp[0].u == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(gp[0].v == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("fit_projection rejects an empty cloud") {
  CHECK_THROWS_AS(fit_projection({}, 8, 8, 0.1), DataError);
}

TEST_CASE("projection keeps every point inside the grid") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = random_cloud(rng, 2 + static_cast<int>(rng.below(60)));
    auto rot = rotate_points(pts, random_pose(rng));
    const int h = 4 + static_cast<int>(rng.below(12));
    const int w = 4 + static_cast<int>(rng.below(12));
    const double margin = rng.uniform(0.0, 0.4);
    auto pp = fit_projection(rot, h, w, margin);
    for (const GridPoint& gp : project_to_grid(rot, pp)) {
      CHECK(gp.u >= -1e-9);
      CHECK(gp.u <= h - 1 + 1e-9);
      CHECK(gp.v >= -1e-9);
      CHECK(gp.v <= w - 1 + 1e-9);
    }
  }
}

TEST_CASE("project_to_grid maps the minima to the offsets and matches a scalar oracle") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto rot = rotate_points(random_cloud(rng, 12), random_pose(rng));
    auto pp = fit_projection(rot, 10, 6, 0.1);
    auto gp = project_to_grid(rot, pp);
    for (std::size_t i = 0; i < rot.size(); ++i) {
      // direct transcription of the forward map, done separately per point
      const double u = (rot[i][0] - pp.x0) / pp.g + pp.o_h;
      const double v = (rot[i][1] - pp.y0) / pp.g + pp.o_w;
      CHECK(gp[i].u == u);
      CHECK(gp[i].v == v);
      CHECK(gp[i].depth == rot[i][2]);
    }
  }

  // the point sitting at the (x0, y0) corner lands exactly on the offsets
  std::vector<Vec3> pts = {{-1, -2, 0}, {3, 5, 1}};
  auto pp = fit_projection(pts, 8, 8, 0.0);
  auto gp = project_to_grid(pts, pp);
  CHECK(gp[0].u == doctest::Approx(pp.o_h).epsilon(1e-12));
  CHECK(gp[0].v == doctest::Approx(pp.o_w).epsilon(1e-12));
}

TEST_CASE("translating the cloud leaves grid coordinates unchanged") {
  Rng rng(5);
  auto pts = random_cloud(rng, 24);
  auto pp1 = fit_projection(pts, 8, 8, 0.1);
  auto gp1 = project_to_grid(pts, pp1);
  std::vector<Vec3> shifted = pts;
  for (auto& p : shifted) {
    p[0] += 13.5;
    p[1] -= 2.25;
    p[2] += 0.75;
  }
  auto pp2 = fit_projection(shifted, 8, 8, 0.1);
  auto gp2 = project_to_grid(shifted, pp2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(gp1[i].u == doctest::Approx(gp2[i].u).epsilon(1e-12));
    CHECK(gp1[i].v == doctest::Approx(gp2[i].v).epsilon(1e-12));
  }
}

TEST_CASE("optical_line under the identity pose") {
  std::vector<Vec3> pts = {{-1, -1, 0}, {1, 1, 0}};
  auto pp = fit_projection(pts, 8, 8, 0.0);
  auto line = optical_line(Pose::identity(), pp, 2, 5);
  CHECK(line.direction[0] == doctest::Approx(0.0));
  CHECK(line.direction[1] == doctest::Approx(0.0));
  CHECK(line.direction[2] == doctest::Approx(1.0));
  // origin recovers the inverse projection at z' = 0
  CHECK(line.origin[0] == doctest::Approx(pp.g * (2 - pp.o_h) + pp.x0).epsilon(1e-12));
  CHECK(line.origin[1] == doctest::Approx(pp.g * (5 - pp.o_w) + pp.y0).epsilon(1e-12));
  CHECK(line.origin[2] == 0.0);
  CHECK(line.grid_u == doctest::Approx(2.0 / 8.0));
  CHECK(line.grid_v == doctest::Approx(5.0 / 8.0));
}

TEST_CASE("optical_line direction is already unit length for orthonormal poses") {
  Rng rng(6);
  std::vector<Vec3> pts = {{-1, -1, -1}, {1, 1, 1}};
  for (int trial = 0; trial < 1000; ++trial) {
    const Pose pose = random_pose(rng);
    const Mat3 a = pose.r.transposed();
    const double norm =
        std::sqrt(a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2) + a(2, 2) * a(2, 2));
    CHECK(std::abs(norm - 1.0) < 1e-12);
  }
}

TEST_CASE("points on the optical line project back to their cell") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose pose = random_pose(rng);
    auto rot = rotate_points(random_cloud(rng, 20), pose);
    const int h = 4 + static_cast<int>(rng.below(10));
    const int w = 4 + static_cast<int>(rng.below(10));
    auto pp = fit_projection(rot, h, w, 0.1);
    const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
    auto line = optical_line(pose, pp, u, v);
    for (double t : {-1.0, 0.3, 2.0}) {
      const Mat3 a = pose.r.transposed();
      const Vec3 d = {a(0, 2), a(1, 2), a(2, 2)};  // unnormalized direction
      const Vec3 p = {line.origin[0] + t * d[0], line.origin[1] + t * d[1],
                      line.origin[2] + t * d[2]};
      auto back = project_to_grid(rotate_points({p}, pose), pp);
      CHECK(std::abs(back[0].u - u) < 1e-9);
      CHECK(std::abs(back[0].v - v) < 1e-9);
      CHECK(std::abs(back[0].depth - t) < 1e-9);
    }
  }
}

TEST_CASE("optical_line rejects out-of-range cells") {
  std::vector<Vec3> pts = {{-1, -1, 0}, {1, 1, 0}};
  auto pp = fit_projection(pts, 8, 8, 0.0);
  CHECK_THROWS_AS(optical_line(Pose::identity(), pp, -1, 0), ContractError);
  CHECK_THROWS_AS(optical_line(Pose::identity(), pp, 0, 8), ContractError);
}

TEST_CASE("sample_poses spacing, frontal pose and orthonormality") {
  auto twelve = sample_poses(12, 30.0);
  CHECK(twelve.size() == 12);

  // consecutive azimuths differ by 30 degrees: check the rotation angle of
  // R_k^T R_{k+1} equals 30 degrees
  for (int k = 0; k + 1 < 12; ++k) {
    const Mat3 rel = twelve[static_cast<std::size_t>(k)].r.transposed().mul(
        twelve[static_cast<std::size_t>(k + 1)].r);
    const double trace = rel(0, 0) + rel(1, 1) + rel(2, 2);
    const double angle = std::acos(std::min(1.0, std::max(-1.0, (trace - 1.0) / 2.0)));
    CHECK(angle == doctest::Approx(kPi / 6.0).epsilon(1e-9));
  }

  auto frontal = sample_poses(1, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(frontal[0].r(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-15));

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int count = 1 + static_cast<int>(rng.below(24));
    for (const Pose& p : sample_poses(count, rng.uniform(-80, 80))) {
      CHECK(p.orthonormality_error() < 1e-12);
      CHECK(std::abs(p.r.det() - 1.0) < 1e-12);
    }
  }
}
