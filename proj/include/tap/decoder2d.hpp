#pragma once

#include <vector>

#include "tap/tensor.hpp"

namespace tap {

struct DecoderStage {
  Index c_in = 0;
  Index c_out = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int out_pad = 0;
};

// Transposed-convolution stack. Stage output extent follows
// (h-1)*stride - 2*pad + kernel + out_pad.
struct DecoderConfig {
  std::vector<DecoderStage> stages;

  // 7x7x256 -> 28 -> 56 -> 112 -> 224x224x3.
  static DecoderConfig paper_preset();
  // 4x4x128 -> 8 -> 16 -> 32x32x3.
  static DecoderConfig desk_preset();

  void validate() const;  // channel chain + final RGB output
  Index output_extent(Index input_extent) const;
};

template <typename T>
void register_decoder_params(ParamSet<T>& params, const DecoderConfig& cfg);

// Applies the stack with a rectifier between stages and a linear final
// stage; output lands in [0,1] only after the loss-side clamp.
template <typename T>
Tensor<T> decode(const Tensor<T>& fmap, ParamSet<T>& params, const DecoderConfig& cfg);

}  // namespace tap
