#pragma once

#include <vector>

#include "tap/pointcloud.hpp"
#include "tap/tensor.hpp"

namespace tap {

struct EncoderConfig {
  Index n_centers = 64;
  Index knn = 16;
  Index c3d = 256;
  Index fps_start = 0;
  std::vector<Index> point_mlp_dims = {3, 64, 128};
};

// Encoder output: n center coordinates plus their feature rows.
template <typename T>
struct EncodedCloud {
  std::vector<Index> center_indices;
  Tensor<T> centers;   // [n x 3], constant leaf
  Tensor<T> features;  // [n x c3d]
};

// Greedy max-min subset selection. First pick is start_index; ties resolve
// to the lowest point index. Pure function of the coordinates.
std::vector<Index> farthest_point_sample(const PointCloud& cloud, Index n, Index start_index = 0);

// k nearest points per center (squared distance, ties by lower index).
// Returns flat n*k indices.
std::vector<Index> knn_groups(const PointCloud& cloud, const std::vector<Index>& centers, Index k);

template <typename T>
struct EncoderParamInit {
  static void register_params(ParamSet<T>& params, const EncoderConfig& cfg);
};

// Per-point MLP, FPS centers, kNN grouping with per-group max pooling, then
// a per-center linear lift to c3d channels. Differentiable w.r.t. params.
template <typename T>
EncodedCloud<T> encode(const PointCloud& cloud, ParamSet<T>& params, const EncoderConfig& cfg);

}  // namespace tap
