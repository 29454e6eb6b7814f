#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tap/dataset.hpp"
#include "tap/image.hpp"
#include "tap/rng.hpp"

using namespace tap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("tap_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("gen_shape surface membership and determinism") {
  SUBCASE("normalized sphere points sit on the unit sphere") {
    auto cloud = gen_shape(ShapeKind::sphere, 256, 42);
    for (const Vec3& p : cloud.points) {
      const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      CHECK(std::abs(r - 1.0) < 1e-6);
    }
  }

  SUBCASE("default sampling count works at 1024 points") {
    auto cloud = gen_shape(ShapeKind::cube, 1024, 7);
    CHECK(cloud.points.size() == 1024);
  }

  SUBCASE("same kind, count and seed reproduce bitwise") {
    for (int k = 0; k < kNumShapeKinds; ++k) {
      auto a = gen_shape(static_cast<ShapeKind>(k), 64, 3);
      auto b = gen_shape(static_cast<ShapeKind>(k), 64, 3);
      REQUIRE(a.points.size() == b.points.size());
      for (std::size_t i = 0; i < a.points.size(); ++i)
        for (int c = 0; c < 3; ++c) CHECK(a.points[i][c] == b.points[i][c]);
    }
  }

  SUBCASE("every kind is normalized: centroid at origin, max radius one") {
    for (int k = 0; k < kNumShapeKinds; ++k) {
      auto cloud = gen_shape(static_cast<ShapeKind>(k), 512, 11);
      Vec3 centroid = {0, 0, 0};
      double max_r = 0.0;
      for (const Vec3& p : cloud.points) {
        for (int c = 0; c < 3; ++c) centroid[c] += p[c];
        max_r = std::max(max_r, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
      }
      for (int c = 0; c < 3; ++c) CHECK(std::abs(centroid[c] / 512.0) < 1e-6);
      CHECK(std::abs(max_r - 1.0) < 1e-6);
    }
  }

  SUBCASE("too few points violate the contract") {
    CHECK_THROWS_AS(gen_shape(ShapeKind::sphere, 8, 0), ContractError);
  }

  SUBCASE("unknown kind name raises a configuration error") {
    CHECK_THROWS_AS(shape_kind_from_name("dodecahedron"), ConfigError);
    CHECK(shape_kind_from_name("torus") == ShapeKind::torus);
  }
}

TEST_CASE("normalize_cloud idempotence, invariance and degenerate input") {
  Rng rng(5);
  PointCloud p;
  for (int i = 0; i < 50; ++i)
    p.points.push_back({rng.uniform(-3, 7), rng.uniform(0, 4), rng.uniform(-2, 2)});

  auto n1 = normalize_cloud(p);
  auto n2 = normalize_cloud(n1);
  for (std::size_t i = 0; i < n1.points.size(); ++i)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(n1.points[i][c] - n2.points[i][c]) < 1e-12);

  PointCloud scaled = p;
  for (auto& q : scaled.points)
    for (int c = 0; c < 3; ++c) q[c] = q[c] * 5.0 + 2.0;
  auto ns = normalize_cloud(scaled);
  for (std::size_t i = 0; i < ns.points.size(); ++i)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(ns.points[i][c] - n1.points[i][c]) < 1e-12);

  PointCloud single;
  single.points = {{3, 3, 3}};
  auto n = normalize_cloud(single);
  for (int c = 0; c < 3; ++c) CHECK(n.points[0][c] == 0.0);
}

TEST_CASE("cloud files round-trip bitwise and reject corruption") {
  const fs::path dir = temp_dir("clouds");
  auto cloud = gen_shape(ShapeKind::torus, 128, 9);

  SUBCASE("save then load is bitwise identical") {
    save_cloud(cloud, dir / "a.tapc");
    auto loaded = load_cloud(dir / "a.tapc");
    REQUIRE(loaded.points.size() == cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
      for (int c = 0; c < 3; ++c) CHECK(loaded.points[i][c] == cloud.points[i][c]);

    save_cloud(loaded, dir / "b.tapc");
    CHECK(read_bytes(dir / "a.tapc") == read_bytes(dir / "b.tapc"));
  }

  SUBCASE("wrong magic is a format error at offset zero") {
    save_cloud(cloud, dir / "bad.tapc");
    auto bytes = read_bytes(dir / "bad.tapc");
    bytes[0] = 'X';
    std::ofstream(dir / "bad.tapc", std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    try {
      load_cloud(dir / "bad.tapc");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset == 0);
    }
  }

  SUBCASE("header count disagreeing with the payload is a format error") {
    save_cloud(cloud, dir / "short.tapc");
    auto bytes = read_bytes(dir / "short.tapc");
    bytes.resize(bytes.size() - 12);  // drop one point
    std::ofstream(dir / "short.tapc", std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(load_cloud(dir / "short.tapc"), FormatError);
  }
}

TEST_CASE("build_dataset counts, determinism and stable split") {
  DatasetConfig cfg;
  cfg.shapes_per_kind = 1;
  cfg.views = 12;
  cfg.n_points = 64;
  cfg.image_size = 16;
  cfg.seed = 21;

  const fs::path dir1 = temp_dir("ds1");
  const DatasetManifest m1 = build_dataset(cfg, dir1);

  SUBCASE("8 shapes x 12 views produce 96 manifest image entries") {
    CHECK(m1.entries.size() == 8);
    std::size_t images = 0;
    for (const auto& e : m1.entries) images += e.image_paths.size();
    CHECK(images == 96);
    for (const auto& e : m1.entries)
      for (const auto& ip : e.image_paths) CHECK(fs::exists(dir1 / ip));
  }

  SUBCASE("every manifest image decodes at the configured resolution") {
    for (const auto& e : m1.entries)
      for (int v = 0; v < m1.views; ++v) {
        const ViewImage img = load_image(m1.image_file(e, v));
        CHECK(img.height == cfg.image_size);
        CHECK(img.width == cfg.image_size);
      }
  }

  SUBCASE("rebuilding with the same seed is byte-identical") {
    const fs::path dir2 = temp_dir("ds2");
    build_dataset(cfg, dir2);
    CHECK(read_bytes(dir1 / "manifest.tsv") == read_bytes(dir2 / "manifest.tsv"));
    for (const auto& e : m1.entries) {
      CHECK(read_bytes(dir1 / e.cloud_path) == read_bytes(dir2 / e.cloud_path));
      for (const auto& ip : e.image_paths) CHECK(read_bytes(dir1 / ip) == read_bytes(dir2 / ip));
    }
  }

  SUBCASE("manifest loads back and preserves entries") {
    const DatasetManifest loaded = load_manifest(dir1 / "manifest.tsv");
    REQUIRE(loaded.entries.size() == m1.entries.size());
    CHECK(loaded.seed == cfg.seed);
    CHECK(loaded.views == cfg.views);
    CHECK(loaded.image_size == cfg.image_size);
    for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
      CHECK(loaded.entries[i].id == m1.entries[i].id);
      CHECK(loaded.entries[i].label == m1.entries[i].label);
    }
  }

  SUBCASE("split is a pure function of the id and non-trivial on a larger set") {
    DatasetConfig big = cfg;
    big.shapes_per_kind = 10;
    big.views = 1;
    const fs::path dir3 = temp_dir("ds3");
    const DatasetManifest m3 = build_dataset(big, dir3);
    std::size_t test_count = 0;
    for (const auto& e : m3.entries) {
      CHECK(is_test_id(e.id) == is_test_id(e.id));  // stable
      if (is_test_id(e.id)) ++test_count;
    }
    CHECK(test_count > 0);
    CHECK(test_count < m3.entries.size());
  }
}

TEST_CASE("manifest referencing a missing file fails to load") {
  DatasetConfig cfg;
  cfg.shapes_per_kind = 1;
  cfg.views = 2;
  cfg.n_points = 32;
  cfg.image_size = 16;
  const fs::path dir = temp_dir("ds_missing");
  const DatasetManifest m = build_dataset(cfg, dir);
  fs::remove(dir / m.entries[3].image_paths[1]);
  CHECK_THROWS_AS(load_manifest(dir / "manifest.tsv"), DataError);
}
