#include "tap/backbone.hpp"

#include <algorithm>
#include <limits>

namespace tap {

namespace {

double sqdist(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<Index> farthest_point_sample(const PointCloud& cloud, Index n, Index start_index) {
  const Index total = static_cast<Index>(cloud.points.size());
  if (n < 1 || n > total)
    throw ContractError("farthest_point_sample: n=" + std::to_string(n) + " outside [1, " +
                        std::to_string(total) + "]");
  if (start_index < 0 || start_index >= total)
    throw ContractError("farthest_point_sample: start index out of range");

  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(n));
  std::vector<double> min_dist(static_cast<std::size_t>(total),
                               std::numeric_limits<double>::infinity());
  Index current = start_index;
  picked.push_back(current);
  for (Index step = 1; step < n; ++step) {
    Index best = -1;
    double best_d = -1.0;
    for (Index i = 0; i < total; ++i) {
      double& d = min_dist[static_cast<std::size_t>(i)];
      d = std::min(d, sqdist(cloud.points[static_cast<std::size_t>(i)],
                             cloud.points[static_cast<std::size_t>(current)]));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    current = best;
    picked.push_back(current);
  }
  return picked;
}

std::vector<Index> knn_groups(const PointCloud& cloud, const std::vector<Index>& centers, Index k) {
  const Index total = static_cast<Index>(cloud.points.size());
  if (k > total) throw ContractError("knn_groups: k exceeds point count");
  std::vector<Index> groups;
  groups.reserve(centers.size() * static_cast<std::size_t>(k));
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(total));
  for (Index c : centers) {
    for (Index i = 0; i < total; ++i)
      dist[static_cast<std::size_t>(i)] = {sqdist(cloud.points[static_cast<std::size_t>(i)],
                                                  cloud.points[static_cast<std::size_t>(c)]),
                                           i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (Index j = 0; j < k; ++j) groups.push_back(dist[static_cast<std::size_t>(j)].second);
  }
  return groups;
}

template <typename T>
void EncoderParamInit<T>::register_params(ParamSet<T>& params, const EncoderConfig& cfg) {
  // Registration only reserves names/shapes; values come from the trainer's
  // initializer. Kept here so every consumer agrees on the layout.
  for (std::size_t l = 0; l + 1 < cfg.point_mlp_dims.size(); ++l) {
    const std::string base = "encoder.point_mlp.l" + std::to_string(l);
    params.add(base + ".weight",
               Tensor<T>::zeros(Shape{cfg.point_mlp_dims[l], cfg.point_mlp_dims[l + 1]}));
    params.add(base + ".bias", Tensor<T>::zeros(Shape{1, cfg.point_mlp_dims[l + 1]}));
  }
  params.add("encoder.center_mlp.l0.weight",
             Tensor<T>::zeros(Shape{cfg.point_mlp_dims.back(), cfg.c3d}));
  params.add("encoder.center_mlp.l0.bias", Tensor<T>::zeros(Shape{1, cfg.c3d}));
}

template <typename T>
EncodedCloud<T> encode(const PointCloud& cloud, ParamSet<T>& params, const EncoderConfig& cfg) {
  const Index total = static_cast<Index>(cloud.points.size());
  if (cfg.knn > total) throw ContractError("encode: knn group size exceeds point count");

  // Point coordinates enter the graph as a constant leaf.
  std::vector<T> coords(static_cast<std::size_t>(total) * 3);
  for (Index i = 0; i < total; ++i)
    for (int c = 0; c < 3; ++c)
      coords[static_cast<std::size_t>(i * 3 + c)] =
          static_cast<T>(cloud.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
  Tensor<T> pts = Tensor<T>::from_data(Shape{total, 3}, std::move(coords));

  Tensor<T> point_feat = mlp_forward(pts, params, "encoder.point_mlp", cfg.point_mlp_dims);

  const std::vector<Index> center_idx = farthest_point_sample(cloud, cfg.n_centers, cfg.fps_start);
  const std::vector<Index> groups = knn_groups(cloud, center_idx, cfg.knn);

  Tensor<T> pooled = group_rows_max(point_feat, groups, cfg.n_centers, cfg.knn);
  Tensor<T> features =
      mlp_forward(pooled, params, "encoder.center_mlp", {cfg.point_mlp_dims.back(), cfg.c3d});

  EncodedCloud<T> enc;
  enc.center_indices = center_idx;
  enc.centers = gather_rows(pts, center_idx);
  enc.features = features;
  return enc;
}

template struct EncoderParamInit<float>;
template struct EncoderParamInit<double>;
template EncodedCloud<float> encode(const PointCloud&, ParamSet<float>&, const EncoderConfig&);
template EncodedCloud<double> encode(const PointCloud&, ParamSet<double>&, const EncoderConfig&);

}  // namespace tap
