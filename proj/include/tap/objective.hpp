#pragma once

#include "tap/image.hpp"
#include "tap/pointcloud.hpp"
#include "tap/tensor.hpp"

namespace tap {

struct LossWeights {
  double w_fg = 20.0;
  double w_bg = 1.0;
};

// Foreground indicator per pixel: 1 where any channel drops below the white
// threshold, 0 on background. Shape [H x W].
template <typename T>
Tensor<T> fg_bg_mask(const ViewImage& gt);

template <typename T>
struct TapLossTerms {
  Tensor<T> fg;     // w_fg * D_fg
  Tensor<T> bg;     // w_bg * D_bg
  Tensor<T> total;  // scalar loss
};

struct TapLossOptions {
  bool clamp_gen = true;
  // Default normalizes each region term by H*W; the alternative divides by
  // the region's own pixel count.
  bool per_region_norm = false;
};

// Weighted foreground/background MSE. `gen` is the raw [H x W x 3] decoder
// output; it is clamped to [0,1] before the squared difference.
template <typename T>
TapLossTerms<T> tap_loss_terms(const Tensor<T>& gen, const ViewImage& gt, const LossWeights& w,
                               const TapLossOptions& opts = {});

template <typename T>
Tensor<T> tap_loss(const Tensor<T>& gen, const ViewImage& gt, const LossWeights& w,
                   const TapLossOptions& opts = {});

// Bidirectional mean squared nearest-neighbor distance.
double chamfer(const PointCloud& a, const PointCloud& b);

}  // namespace tap
