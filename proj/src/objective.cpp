#include "tap/objective.hpp"

#include <limits>

namespace tap {

template <typename T>
Tensor<T> fg_bg_mask(const ViewImage& gt) {
  std::vector<T> mask(static_cast<std::size_t>(gt.height) * static_cast<std::size_t>(gt.width),
                      T(0));
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x)
      for (int c = 0; c < 3; ++c)
        if (gt.at(y, x, c) < kBackgroundThreshold) {
          mask[static_cast<std::size_t>(y * gt.width + x)] = T(1);
          break;
        }
  return Tensor<T>::from_data(Shape{gt.height, gt.width}, std::move(mask));
}

template <typename T>
TapLossTerms<T> tap_loss_terms(const Tensor<T>& gen, const ViewImage& gt, const LossWeights& w,
                               const TapLossOptions& opts) {
  if (w.w_fg < 0.0 || w.w_bg < 0.0) throw ContractError("tap_loss: weights must be >= 0");
  if (gen.shape().rank() != 3 || gen.shape()[0] != gt.height || gen.shape()[1] != gt.width ||
      gen.shape()[2] != 3)
    throw ContractError("tap_loss: generated image shape " + gen.shape().str() +
                        " does not match ground truth " + std::to_string(gt.height) + "x" +
                        std::to_string(gt.width) + "x3");

  const Index hw = static_cast<Index>(gt.height) * static_cast<Index>(gt.width);
  Tensor<T> g = reshape(gen, Shape{hw, 3});
  if (opts.clamp_gen) g = clamp(g, T(0), T(1));

  std::vector<T> gt_data(gt.pixels.size());
  for (std::size_t i = 0; i < gt.pixels.size(); ++i) gt_data[i] = static_cast<T>(gt.pixels[i]);
  Tensor<T> gt_t = Tensor<T>::from_data(Shape{hw, 3}, std::move(gt_data));

  Tensor<T> sq = square(sub(g, gt_t));
  Tensor<T> third = Tensor<T>::filled(Shape{3, 1}, T(1) / T(3));
  Tensor<T> per_pixel = matmul(sq, third);  // [hw x 1] channel means

  Tensor<T> mask = fg_bg_mask<T>(gt);
  Index fg_count = 0;
  for (T m : mask.value())
    if (m > T(0)) ++fg_count;
  const Index bg_count = hw - fg_count;

  const double fg_denom = opts.per_region_norm ? std::max<Index>(fg_count, 1) : hw;
  const double bg_denom = opts.per_region_norm ? std::max<Index>(bg_count, 1) : hw;

  std::vector<T> fg_row(static_cast<std::size_t>(hw));
  std::vector<T> bg_row(static_cast<std::size_t>(hw));
  for (Index i = 0; i < hw; ++i) {
    const bool fg = mask.value()[static_cast<std::size_t>(i)] > T(0);
    fg_row[static_cast<std::size_t>(i)] = fg ? static_cast<T>(w.w_fg / fg_denom) : T(0);
    bg_row[static_cast<std::size_t>(i)] = fg ? T(0) : static_cast<T>(w.w_bg / bg_denom);
  }

  TapLossTerms<T> terms;
  terms.fg = matmul(Tensor<T>::from_data(Shape{1, hw}, std::move(fg_row)), per_pixel);
  terms.bg = matmul(Tensor<T>::from_data(Shape{1, hw}, std::move(bg_row)), per_pixel);
  terms.total = add(terms.fg, terms.bg);
  return terms;
}

template <typename T>
Tensor<T> tap_loss(const Tensor<T>& gen, const ViewImage& gt, const LossWeights& w,
                   const TapLossOptions& opts) {
  return tap_loss_terms(gen, gt, w, opts).total;
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty()) throw DataError("chamfer: empty point cloud");
  auto directed = [](const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const Vec3& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to.points) {
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      sum += best;
    }
    return sum / static_cast<double>(from.points.size());
  };
  return directed(a, b) + directed(b, a);
}

#define TAP_INSTANTIATE_OBJECTIVE(T)                                                        \
  template Tensor<T> fg_bg_mask<T>(const ViewImage&);                                       \
  template TapLossTerms<T> tap_loss_terms(const Tensor<T>&, const ViewImage&,               \
                                          const LossWeights&, const TapLossOptions&);       \
  template Tensor<T> tap_loss(const Tensor<T>&, const ViewImage&, const LossWeights&,       \
                              const TapLossOptions&);

TAP_INSTANTIATE_OBJECTIVE(float)
TAP_INSTANTIATE_OBJECTIVE(double)

#undef TAP_INSTANTIATE_OBJECTIVE

}  // namespace tap
