#pragma once

#include <string>
#include <vector>

#include "tap/backbone.hpp"
#include "tap/geometry.hpp"
#include "tap/rng.hpp"
#include "tap/tensor.hpp"

namespace tap {

enum class PhotoMode { cross_attention, learnable_query, direct_projection };

PhotoMode photo_mode_from_name(const std::string& name);
const char* photo_mode_name(PhotoMode mode);

struct PhotoConfig {
  int layers = 6;
  Index channels = 256;  // C2d
  int heads = 4;
  double drop_path = 0.1;
  PhotoMode mode = PhotoMode::cross_attention;
  Index grid_h = 7;
  Index grid_w = 7;
  Index c3d = 256;  // matches the encoder's feature width

  void validate() const;
};

// Per-forward context: training enables drop-path (fed by `rng`), and a
// non-null `attn_weights` collects every head's softmax matrix.
template <typename T>
struct PhotoForwardCtx {
  bool training = false;
  Rng* rng = nullptr;
  double drop_path = 0.0;
  std::vector<Tensor<T>>* attn_weights = nullptr;
};

// Queries for one (pose, projection) pair. Row (u, v) of `init` packs
// [O_x, O_y, O_z, d_x, d_y, d_z, u/h, v/w]; `lifted` is the MLP image of it.
template <typename T>
struct QueryGrid {
  Tensor<T> init;    // [h*w x 8], constant
  Tensor<T> lifted;  // [h*w x C2d]
};

// Memory rows 0..n-1 carry the lifted per-center features; the final row is
// the shared learnable pad token.
template <typename T>
struct MemoryTokens {
  Tensor<T> tokens;  // [(n+1) x C2d]
  Index n = 0;
};

template <typename T>
void register_photo_params(ParamSet<T>& params, const PhotoConfig& cfg);

template <typename T>
QueryGrid<T> build_queries(const Pose& pose, const ProjectionParams& pp, ParamSet<T>& params,
                           const PhotoConfig& cfg);

template <typename T>
MemoryTokens<T> build_memory(const EncodedCloud<T>& enc, ParamSet<T>& params,
                             const PhotoConfig& cfg);

// Pre-normalization block: norm -> multi-head cross-attention -> residual,
// then norm -> feed-forward (C -> 4C -> C) -> residual. Drop-path gates each
// residual branch during training.
template <typename T>
Tensor<T> cross_attention_block(const Tensor<T>& q, const Tensor<T>& mem_tokens,
                                ParamSet<T>& params, const PhotoConfig& cfg, int layer,
                                PhotoForwardCtx<T>* ctx = nullptr);

// Emits the [h x w x C2d] view-feature map for the configured mode.
template <typename T>
Tensor<T> photograph_forward(const EncodedCloud<T>& enc, const Pose& pose,
                             const ProjectionParams& pp, ParamSet<T>& params,
                             const PhotoConfig& cfg, PhotoForwardCtx<T>* ctx = nullptr);

}  // namespace tap
