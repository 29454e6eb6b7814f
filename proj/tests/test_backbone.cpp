#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "tap/backbone.hpp"
#include "tap/gradcheck.hpp"
#include "tap/rng.hpp"
#include "tap/shapes.hpp"
#include "tap/trainer.hpp"

using namespace tap;

namespace {

EncoderConfig small_encoder() {
  EncoderConfig cfg;
  cfg.n_centers = 8;
  cfg.knn = 6;
  cfg.c3d = 32;
  cfg.point_mlp_dims = {3, 16, 24};
  return cfg;
}

PointCloud random_generic_cloud(Rng& rng, int n) {
  PointCloud p;
  for (int i = 0; i < n; ++i)
    p.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  return p;
}

}  // namespace

TEST_CASE("farthest_point_sample basic contracts") {
  SUBCASE("n equal to the point count returns every index deterministically") {
    PointCloud p = gen_shape(ShapeKind::cube, 32, 1);
    auto idx = farthest_point_sample(p, 32, 0);
    CHECK(idx.size() == 32);
    auto sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < 32; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    CHECK(idx == farthest_point_sample(p, 32, 0));
  }

  SUBCASE("on the unit square the second pick is the opposite corner") {
    PointCloud p;
    p.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    auto idx = farthest_point_sample(p, 2, 0);
    CHECK(idx[0] == 0);
    CHECK(idx[1] == 3);
  }

  SUBCASE("n larger than the cloud violates the contract") {
    PointCloud p = gen_shape(ShapeKind::cube, 16, 2);
    CHECK_THROWS_AS(farthest_point_sample(p, 17, 0), ContractError);
  }
}

TEST_CASE("farthest_point_sample equals the quadratic-time oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(125));
    PointCloud p = random_generic_cloud(rng, n);
    const Index picks = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const Index start = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    CHECK(farthest_point_sample(p, picks, start) == oracle::fps(p.points, picks, start));
  }
}

TEST_CASE("encode output shape, determinism and finiteness") {
  Rng rng(4);
  const EncoderConfig cfg = small_encoder();
  ParamSet<double> params;
  EncoderParamInit<double>::register_params(params, cfg);
  Rng init_rng(7);
  init_params(params, init_rng);

  PointCloud p = gen_shape(ShapeKind::torus, 64, 5);
  auto enc = encode(p, params, cfg);
  CHECK(enc.features.shape() == Shape{cfg.n_centers, cfg.c3d});
  CHECK(enc.centers.shape() == Shape{cfg.n_centers, 3});
  for (double v : enc.features.value()) CHECK(std::isfinite(v));

  auto enc2 = encode(p, params, cfg);
  CHECK(enc.features.value() == enc2.features.value());

  SUBCASE("zero final layer makes all features equal the bias (zero)") {
    for (auto& v : params.at("encoder.center_mlp.l0.weight").value()) v = 0.0;
    for (auto& v : params.at("encoder.center_mlp.l0.bias").value()) v = 0.0;
    auto enc0 = encode(p, params, cfg);
    for (double v : enc0.features.value()) CHECK(v == 0.0);
  }

  SUBCASE("grouping larger than the cloud violates the contract") {
    EncoderConfig bad = cfg;
    bad.knn = 100;
    CHECK_THROWS_AS(encode(p, params, bad), ContractError);
  }
}

TEST_CASE("permuting input points permutes centers but not their features") {
  Rng rng(6);
  const EncoderConfig cfg = small_encoder();
  ParamSet<double> params;
  EncoderParamInit<double>::register_params(params, cfg);
  Rng init_rng(8);
  init_params(params, init_rng);

  PointCloud p = random_generic_cloud(rng, 40);
  auto enc = encode(p, params, cfg);

  // reverse the point order; keep the same geometric start point for FPS
  PointCloud rev = p;
  std::reverse(rev.points.begin(), rev.points.end());
  EncoderConfig cfg_rev = cfg;
  cfg_rev.fps_start = static_cast<Index>(p.points.size()) - 1 - cfg.fps_start;
  auto enc_rev = encode(rev, params, cfg_rev);

  // match centers by coordinates, then compare feature rows
  for (Index i = 0; i < cfg.n_centers; ++i) {
    const double cx = enc.centers.value()[static_cast<std::size_t>(i * 3 + 0)];
    const double cy = enc.centers.value()[static_cast<std::size_t>(i * 3 + 1)];
    const double cz = enc.centers.value()[static_cast<std::size_t>(i * 3 + 2)];
    Index match = -1;
    for (Index j = 0; j < cfg.n_centers; ++j) {
      if (enc_rev.centers.value()[static_cast<std::size_t>(j * 3 + 0)] == cx &&
          enc_rev.centers.value()[static_cast<std::size_t>(j * 3 + 1)] == cy &&
          enc_rev.centers.value()[static_cast<std::size_t>(j * 3 + 2)] == cz) {
        match = j;
        break;
      }
    }
    REQUIRE(match >= 0);
    for (Index c = 0; c < cfg.c3d; ++c)
      CHECK(enc.features.value()[static_cast<std::size_t>(i * cfg.c3d + c)] ==
            doctest::Approx(
                enc_rev.features.value()[static_cast<std::size_t>(match * cfg.c3d + c)])
                .epsilon(1e-9));
  }
}

TEST_CASE("encoder gradients pass the finite-difference check") {
  const EncoderConfig cfg = small_encoder();
  ParamSet<double> params;
  EncoderParamInit<double>::register_params(params, cfg);
  Rng init_rng(9);
  init_params(params, init_rng);
  PointCloud p = gen_shape(ShapeKind::capsule, 48, 10);

  auto f = [&](ParamSet<double>& ps) { return mean_all(square(encode(p, ps, cfg).features)); };
  GradCheckOptions opts;
  opts.eps = 1e-5;
  CHECK(grad_check<double>(f, params, opts).max_rel_err < 1e-5);
}
