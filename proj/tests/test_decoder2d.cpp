#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tap/decoder2d.hpp"
#include "tap/gradcheck.hpp"
#include "tap/rng.hpp"
#include "tap/trainer.hpp"

using namespace tap;

namespace {

template <typename T>
Tensor<T> random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(static_cast<std::size_t>(s.numel()));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>::from_data(s, std::move(v));
}

}  // namespace

TEST_CASE("paper preset maps 7x7x256 to 224x224x3 through 28/56/112") {
  const DecoderConfig cfg = DecoderConfig::paper_preset();
  ParamSet<float> params;
  register_decoder_params(params, cfg);
  Rng rng(1);
  init_params(params, rng);

  // end-to-end extent plus per-stage checkpoints
  CHECK(cfg.output_extent(7) == 224);
  Index e = 7;
  const std::vector<Index> expected = {28, 56, 112, 224};
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const DecoderStage& s = cfg.stages[i];
    e = (e - 1) * s.stride - 2 * s.pad + s.kernel + s.out_pad;
    CHECK(e == expected[i]);
  }

  auto fmap = random_tensor<float>(Shape{7, 7, 256}, rng);
  auto img = decode(fmap, params, cfg);
  CHECK(img.shape() == Shape{224, 224, 3});
}

TEST_CASE("desk preset maps 4x4x128 to 32x32x3") {
  const DecoderConfig cfg = DecoderConfig::desk_preset();
  CHECK(cfg.output_extent(4) == 32);
  ParamSet<float> params;
  register_decoder_params(params, cfg);
  Rng rng(2);
  init_params(params, rng);
  auto img = decode(random_tensor<float>(Shape{4, 4, 128}, rng), params, cfg);
  CHECK(img.shape() == Shape{32, 32, 3});
}

TEST_CASE("upsampling factor of the paper preset is exactly 32") {
  const DecoderConfig cfg = DecoderConfig::paper_preset();
  for (Index in : {4, 7, 9}) CHECK(cfg.output_extent(in) == 32 * in);
}

TEST_CASE("zero weights and biases produce an all-zero image") {
  const DecoderConfig cfg = DecoderConfig::desk_preset();
  ParamSet<double> params;
  register_decoder_params(params, cfg);  // zeros by construction
  Rng rng(3);
  auto img = decode(random_tensor<double>(Shape{4, 4, 128}, rng), params, cfg);
  for (double v : img.value()) CHECK(v == 0.0);
}

TEST_CASE("decode is deterministic and differentiable w.r.t. the feature map") {
  DecoderConfig cfg;
  cfg.stages = {{6, 4, 3, 2, 1, 1}, {4, 3, 3, 2, 1, 1}};
  ParamSet<double> params;
  register_decoder_params(params, cfg);
  Rng rng(4);
  init_params(params, rng);

  ParamSet<double> with_input = params;
  Rng rng2(5);
  with_input.add("input.fmap", random_tensor<double>(Shape{3, 3, 6}, rng2));

  auto f = [&](ParamSet<double>& ps) {
    auto fmap = reshape(ps.at("input.fmap"), Shape{3, 3, 6});
    return mean_all(square(decode(fmap, ps, cfg)));
  };
  CHECK(f(with_input).item() == f(with_input).item());

  GradCheckOptions opts;
  opts.eps = 1e-5;
  CHECK(grad_check<double>(f, with_input, opts).max_rel_err < 1e-5);
}

TEST_CASE("configuration errors: broken chain, wrong input channels") {
  DecoderConfig bad;
  bad.stages = {{8, 4, 3, 2, 1, 1}, {6, 3, 3, 2, 1, 1}};  // 4 != 6
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  DecoderConfig not_rgb;
  not_rgb.stages = {{8, 4, 3, 2, 1, 1}};
  CHECK_THROWS_AS(not_rgb.validate(), ConfigError);

  const DecoderConfig cfg = DecoderConfig::desk_preset();
  ParamSet<double> params;
  register_decoder_params(params, cfg);
  Rng rng(6);
  CHECK_THROWS_AS(decode(random_tensor<double>(Shape{4, 4, 64}, rng), params, cfg), ConfigError);
}
