#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "tap/renderer.hpp"
#include "tap/rng.hpp"
#include "tap/shapes.hpp"

using namespace tap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("tap_render_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace

TEST_CASE("single point splats at the image center") {
  PointCloud one;
  one.points = {{0.4, -0.7, 0.2}};
  const ViewImage img = render(one, Pose::identity(), 17, 17, 1);
  CHECK(img.foreground(8, 8));
  CHECK(img.at(8, 8, 0) < 1.0);
  // far corners stay white
  CHECK(!img.foreground(0, 0));
  CHECK(img.at(0, 0, 0) == 1.0);
}

TEST_CASE("z-buffer keeps the nearer of two coincident points") {
  // A and B share (u, v); C sits elsewhere and anchors the depth range to
  // [0.2, 0.5]. The shared pixel must take depth 0.2, which shades 0.15.
  PointCloud cloud;
  cloud.points = {{-1.0, -1.0, 0.8}, {-1.0, -1.0, 0.2}, {1.0, 1.0, 0.5}};
  const ViewImage img = render(cloud, Pose::identity(), 17, 17, 2);
  const ViewImage swapped = [] {
    PointCloud c2;
    c2.points = {{-1.0, -1.0, 0.2}, {-1.0, -1.0, 0.8}, {1.0, 1.0, 0.5}};
    return render(c2, Pose::identity(), 17, 17, 2);
  }();
  CHECK(img.pixels == swapped.pixels);  // insertion order cannot matter here
  CHECK(img.foreground(2, 2));
  CHECK(img.at(2, 2, 0) == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("renderer equals the per-pixel brute-force oracle exactly") {
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const auto kind = static_cast<ShapeKind>(trial % kNumShapeKinds);
    const PointCloud cloud = gen_shape(kind, 96, 100 + static_cast<std::uint64_t>(trial));
    const Pose pose(Mat3::rot_x(rng.uniform(-1.0, 1.0)).mul(Mat3::rot_z(rng.uniform(-kPi, kPi))));
    const int radius = static_cast<int>(rng.below(3));
    const ViewImage fast = render(cloud, pose, 16, 16, radius);
    const ViewImage slow = oracle::render(cloud, pose, 16, 16, radius);
    CHECK(fast.pixels == slow.pixels);
    CHECK(fast.fg_mask == slow.fg_mask);
  }
}

TEST_CASE("rendering is deterministic and pose-equivariant") {
  const PointCloud cloud = gen_shape(ShapeKind::cone, 200, 5);
  const Pose pose = sample_poses(12, 30.0)[7];

  const ViewImage a = render(cloud, pose, 24, 24, 1);
  const ViewImage b = render(cloud, pose, 24, 24, 1);
  CHECK(a.pixels == b.pixels);

  // rotating the cloud first, then rendering with identity, is pixel-exact
  PointCloud rotated = cloud;
  rotated.points = rotate_points(cloud.points, pose);
  const ViewImage c = render(rotated, Pose::identity(), 24, 24, 1);
  CHECK(a.pixels == c.pixels);
  CHECK(a.fg_mask == c.fg_mask);
}

TEST_CASE("every nonempty cloud yields foreground pixels and white background") {
  for (int k = 0; k < kNumShapeKinds; ++k) {
    const PointCloud cloud = gen_shape(static_cast<ShapeKind>(k), 128, 50 + k);
    const ViewImage img = render(cloud, sample_poses(4, 30.0)[static_cast<std::size_t>(k % 4)],
                                 32, 32, 1);
    CHECK(img.foreground_count() > 0);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (!img.foreground(y, x))
          for (int c = 0; c < 3; ++c) CHECK(img.at(y, x, c) == 1.0);
  }
}

TEST_CASE("renderer rejects an empty cloud") {
  PointCloud empty;
  CHECK_THROWS_AS(render(empty, Pose::identity(), 16, 16, 1), DataError);
}

TEST_CASE("image files round-trip within quantization") {
  const fs::path dir = temp_dir("io");
  const PointCloud cloud = gen_shape(ShapeKind::capsule, 150, 8);
  const ViewImage img = render(cloud, Pose::identity(), 20, 20, 1);

  SUBCASE("rendered image round-trips within 1/255") {
    save_image(img, dir / "a.ppm");
    const ViewImage back = load_image(dir / "a.ppm");
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      max_diff = std::max(max_diff, std::abs(img.pixels[i] - back.pixels[i]));
    CHECK(max_diff <= 1.0 / 255.0 + 1e-12);
    CHECK(back.fg_mask == img.fg_mask);
  }

  SUBCASE("an all-white image round-trips exactly") {
    const ViewImage white = ViewImage::white(12, 9);
    save_image(white, dir / "white.ppm");
    const ViewImage back = load_image(dir / "white.ppm");
    CHECK(back.pixels == white.pixels);
    CHECK(back.foreground_count() == 0);
  }

  SUBCASE("header and payload disagreement is a format error") {
    save_image(img, dir / "c.ppm");
    std::ifstream is(dir / "c.ppm", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 7);
    std::ofstream(dir / "c.ppm", std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(load_image(dir / "c.ppm"), FormatError);
  }

  SUBCASE("bad magic is a format error") {
    std::ofstream(dir / "bad.ppm", std::ios::binary) << "P5\n4 4\n255\n";
    CHECK_THROWS_AS(load_image(dir / "bad.ppm"), FormatError);
  }
}

TEST_CASE("default splat radius scales with resolution") {
  CHECK(default_splat_radius(224, 224) == 2);
  CHECK(default_splat_radius(112, 112) == 1);
  CHECK(default_splat_radius(32, 32) == 1);  // never drops below one pixel
}
