#include "tap/shapes.hpp"

#include <cmath>

#include "tap/rng.hpp"

namespace tap {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

Vec3 sample_sphere(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, kTwoPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Uniform point in the triangle (a, b, c).
Vec3 sample_triangle(Rng& rng, const Vec3& a, const Vec3& b, const Vec3& c) {
  const double su = std::sqrt(rng.uniform());
  const double v = rng.uniform();
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    const auto k = static_cast<std::size_t>(i);
    p[k] = (1.0 - su) * a[k] + su * (1.0 - v) * b[k] + su * v * c[k];
  }
  return p;
}

Vec3 sample_cube(Rng& rng) {
  const auto face = static_cast<int>(rng.below(6));
  const double a = rng.uniform(-1.0, 1.0);
  const double b = rng.uniform(-1.0, 1.0);
  switch (face) {
    case 0: return {1.0, a, b};
    case 1: return {-1.0, a, b};
    case 2: return {a, 1.0, b};
    case 3: return {a, -1.0, b};
    case 4: return {a, b, 1.0};
    default: return {a, b, -1.0};
  }
}

Vec3 sample_cylinder(Rng& rng) {
  const double radius = 0.6, half_h = 1.0;
  const double side_area = kTwoPi * radius * 2.0 * half_h;
  const double cap_area = kPi * radius * radius;
  const double total = side_area + 2.0 * cap_area;
  const double pick = rng.uniform(0.0, total);
  if (pick < side_area) {
    const double phi = rng.uniform(0.0, kTwoPi);
    const double z = rng.uniform(-half_h, half_h);
    return {radius * std::cos(phi), radius * std::sin(phi), z};
  }
  const double z = pick < side_area + cap_area ? half_h : -half_h;
  const double r = radius * std::sqrt(rng.uniform());
  const double phi = rng.uniform(0.0, kTwoPi);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Vec3 sample_torus(Rng& rng) {
  const double major = 0.7, minor = 0.3;
  // Rejection keeps the surface density uniform in the tube angle.
  for (;;) {
    const double theta = rng.uniform(0.0, kTwoPi);
    const double phi = rng.uniform(0.0, kTwoPi);
    const double accept = (1.0 + (minor / major) * std::cos(phi)) / (1.0 + minor / major);
    if (rng.uniform() <= accept) {
      const double ring = major + minor * std::cos(phi);
      return {ring * std::cos(theta), ring * std::sin(theta), minor * std::sin(phi)};
    }
  }
}

Vec3 sample_cone(Rng& rng) {
  const double radius = 0.8, apex_z = 1.0, base_z = -1.0;
  const double height = apex_z - base_z;
  const double slant = std::sqrt(height * height + radius * radius);
  const double lateral_area = kPi * radius * slant;
  const double base_area = kPi * radius * radius;
  const double pick = rng.uniform(0.0, lateral_area + base_area);
  const double phi = rng.uniform(0.0, kTwoPi);
  if (pick < lateral_area) {
    const double t = std::sqrt(rng.uniform());  // area grows with distance from apex
    const double r = t * radius;
    return {r * std::cos(phi), r * std::sin(phi), apex_z - t * height};
  }
  const double r = radius * std::sqrt(rng.uniform());
  return {r * std::cos(phi), r * std::sin(phi), base_z};
}

Vec3 sample_pyramid(Rng& rng) {
  const double half = 0.8;
  const Vec3 apex = {0.0, 0.0, 1.0};
  const Vec3 c0 = {half, half, -1.0};
  const Vec3 c1 = {-half, half, -1.0};
  const Vec3 c2 = {-half, -half, -1.0};
  const Vec3 c3 = {half, -half, -1.0};

  const double base_area = 4.0 * half * half;
  const double edge = 2.0 * half;
  const double slant_h = std::sqrt(half * half + 4.0);  // apex height 2 over face midline
  const double face_area = 0.5 * edge * slant_h;
  const double pick = rng.uniform(0.0, base_area + 4.0 * face_area);
  if (pick < base_area) {
    return {rng.uniform(-half, half), rng.uniform(-half, half), -1.0};
  }
  const int face = std::min(3, static_cast<int>((pick - base_area) / face_area));
  switch (face) {
    case 0: return sample_triangle(rng, apex, c0, c1);
    case 1: return sample_triangle(rng, apex, c1, c2);
    case 2: return sample_triangle(rng, apex, c2, c3);
    default: return sample_triangle(rng, apex, c3, c0);
  }
}

Vec3 sample_capsule(Rng& rng) {
  const double radius = 0.5, half_h = 0.5;
  const double side_area = kTwoPi * radius * 2.0 * half_h;
  const double caps_area = 4.0 * kPi * radius * radius;  // two hemispheres
  const double pick = rng.uniform(0.0, side_area + caps_area);
  if (pick < side_area) {
    const double phi = rng.uniform(0.0, kTwoPi);
    const double z = rng.uniform(-half_h, half_h);
    return {radius * std::cos(phi), radius * std::sin(phi), z};
  }
  Vec3 s = sample_sphere(rng);
  const double shift = s[2] >= 0.0 ? half_h : -half_h;
  return {radius * s[0], radius * s[1], radius * s[2] + shift};
}

Vec3 sample_ellipsoid(Rng& rng) {
  const Vec3 s = sample_sphere(rng);
  return {1.0 * s[0], 0.7 * s[1], 0.45 * s[2]};
}

}  // namespace

const char* shape_kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::cube: return "cube";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::torus: return "torus";
    case ShapeKind::cone: return "cone";
    case ShapeKind::pyramid: return "pyramid";
    case ShapeKind::capsule: return "capsule";
    case ShapeKind::ellipsoid: return "ellipsoid";
  }
  throw ConfigError("unknown shape kind value");
}

ShapeKind shape_kind_from_name(const std::string& name) {
  for (int k = 0; k < kNumShapeKinds; ++k) {
    const auto kind = static_cast<ShapeKind>(k);
    if (name == shape_kind_name(kind)) return kind;
  }
  throw ConfigError("unknown shape kind: " + name);
}

namespace {

// Antithetic sphere sampling: pairs (p, -p) cancel the sample centroid
// exactly, so normalization never shifts the sphere center and every point
// keeps unit norm. An odd count starts with a zero-sum triple in a random
// plane.
void sample_sphere_balanced(Rng& rng, int n, std::vector<Vec3>& out) {
  int remaining = n;
  if (remaining % 2 == 1) {
    const Vec3 e1 = sample_sphere(rng);
    Vec3 any = sample_sphere(rng);
    // Gram-Schmidt for a unit vector orthogonal to e1.
    double dot = any[0] * e1[0] + any[1] * e1[1] + any[2] * e1[2];
    Vec3 e2 = {any[0] - dot * e1[0], any[1] - dot * e1[1], any[2] - dot * e1[2]};
    const double len = std::sqrt(e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]);
    for (int c = 0; c < 3; ++c) e2[static_cast<std::size_t>(c)] /= len;
    const double s3 = std::sqrt(3.0) / 2.0;
    out.push_back(e1);
    out.push_back({-0.5 * e1[0] + s3 * e2[0], -0.5 * e1[1] + s3 * e2[1], -0.5 * e1[2] + s3 * e2[2]});
    out.push_back({-0.5 * e1[0] - s3 * e2[0], -0.5 * e1[1] - s3 * e2[1], -0.5 * e1[2] - s3 * e2[2]});
    remaining -= 3;
  }
  for (int i = 0; i < remaining / 2; ++i) {
    const Vec3 p = sample_sphere(rng);
    out.push_back(p);
    out.push_back({-p[0], -p[1], -p[2]});
  }
}

}  // namespace

PointCloud gen_shape(ShapeKind kind, int n_points, std::uint64_t seed) {
  if (n_points < 16) throw ContractError("gen_shape: n_points must be >= 16");
  Rng rng(seed);
  PointCloud p;
  p.label = static_cast<int>(kind);
  p.points.reserve(static_cast<std::size_t>(n_points));
  if (kind == ShapeKind::sphere) {
    sample_sphere_balanced(rng, n_points, p.points);
  } else {
    for (int i = 0; i < n_points; ++i) {
      switch (kind) {
        case ShapeKind::sphere: break;
        case ShapeKind::cube: p.points.push_back(sample_cube(rng)); break;
        case ShapeKind::cylinder: p.points.push_back(sample_cylinder(rng)); break;
        case ShapeKind::torus: p.points.push_back(sample_torus(rng)); break;
        case ShapeKind::cone: p.points.push_back(sample_cone(rng)); break;
        case ShapeKind::pyramid: p.points.push_back(sample_pyramid(rng)); break;
        case ShapeKind::capsule: p.points.push_back(sample_capsule(rng)); break;
        case ShapeKind::ellipsoid: p.points.push_back(sample_ellipsoid(rng)); break;
      }
    }
  }
  return snap_to_float(normalize_cloud(p));
}

}  // namespace tap
