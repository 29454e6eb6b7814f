#include "tap/photograph.hpp"

#include <cmath>

namespace tap {

PhotoMode photo_mode_from_name(const std::string& name) {
  if (name == "cross_attention") return PhotoMode::cross_attention;
  if (name == "learnable_query") return PhotoMode::learnable_query;
  if (name == "direct_projection") return PhotoMode::direct_projection;
  throw ConfigError("unknown photograph mode: " + name);
}

const char* photo_mode_name(PhotoMode mode) {
  switch (mode) {
    case PhotoMode::cross_attention: return "cross_attention";
    case PhotoMode::learnable_query: return "learnable_query";
    case PhotoMode::direct_projection: return "direct_projection";
  }
  throw ConfigError("unknown photograph mode value");
}

void PhotoConfig::validate() const {
  if (layers < 1) throw ConfigError("photo config: layers must be >= 1");
  if (channels < 1 || heads < 1 || channels % heads != 0)
    throw ConfigError("photo config: channels (" + std::to_string(channels) +
                      ") must be divisible by heads (" + std::to_string(heads) + ")");
  if (grid_h < 1 || grid_w < 1) throw ConfigError("photo config: grid extents must be >= 1");
  if (drop_path < 0.0 || drop_path >= 1.0)
    throw ConfigError("photo config: drop_path must be in [0, 1)");
}

namespace {

template <typename T>
void add_linear(ParamSet<T>& params, const std::string& name, Index in, Index out) {
  params.add(name + ".weight", Tensor<T>::zeros(Shape{in, out}));
  params.add(name + ".bias", Tensor<T>::zeros(Shape{1, out}));
}

template <typename T>
void add_norm(ParamSet<T>& params, const std::string& name, Index c) {
  params.add(name + ".gain", Tensor<T>::filled(Shape{1, c}, T(1)));
  params.add(name + ".bias", Tensor<T>::zeros(Shape{1, c}));
}

// Drop-path over one residual branch. Returns the branch term to add, or an
// undefined tensor when the branch is skipped this sample.
template <typename T>
Tensor<T> drop_path_branch(const Tensor<T>& branch, PhotoForwardCtx<T>* ctx) {
  if (ctx == nullptr || !ctx->training || ctx->drop_path <= 0.0 || ctx->rng == nullptr)
    return branch;
  if (ctx->rng->uniform() < ctx->drop_path) return Tensor<T>();
  return scale(branch, static_cast<T>(1.0 / (1.0 - ctx->drop_path)));
}

}  // namespace

template <typename T>
void register_photo_params(ParamSet<T>& params, const PhotoConfig& cfg) {
  cfg.validate();
  const Index c = cfg.channels;

  add_linear(params, "photo.memory_mlp.l0", cfg.c3d + 3, c);
  params.add("photo.pad", Tensor<T>::zeros(Shape{1, c}));

  if (cfg.mode == PhotoMode::cross_attention) {
    add_linear(params, "photo.query_mlp.l0", 8, 128);
    add_linear(params, "photo.query_mlp.l1", 128, c);
  } else if (cfg.mode == PhotoMode::learnable_query) {
    add_linear(params, "photo.lq_mlp.l0", 9, 128);
    add_linear(params, "photo.lq_mlp.l1", 128, cfg.grid_h * cfg.grid_w * c);
  }

  if (cfg.mode != PhotoMode::direct_projection) {
    for (int l = 0; l < cfg.layers; ++l) {
      const std::string base = "photo.layer" + std::to_string(l);
      add_norm(params, base + ".q_norm", c);
      add_norm(params, base + ".mem_norm", c);
      add_linear(params, base + ".attn.wq", c, c);
      add_linear(params, base + ".attn.wk", c, c);
      add_linear(params, base + ".attn.wv", c, c);
      add_linear(params, base + ".attn.wo", c, c);
      add_norm(params, base + ".ffn_norm", c);
      add_linear(params, base + ".ffn.l0", c, 4 * c);
      add_linear(params, base + ".ffn.l1", 4 * c, c);
    }
  }
}

template <typename T>
QueryGrid<T> build_queries(const Pose& pose, const ProjectionParams& pp, ParamSet<T>& params,
                           const PhotoConfig& cfg) {
  const Index h = cfg.grid_h, w = cfg.grid_w;
  if (pp.h != h || pp.w != w)
    throw ContractError("build_queries: projection grid " + std::to_string(pp.h) + "x" +
                        std::to_string(pp.w) + " does not match photo grid");
  std::vector<T> init(static_cast<std::size_t>(h * w * 8));
  for (Index u = 0; u < h; ++u)
    for (Index v = 0; v < w; ++v) {
      const OpticalLine line = optical_line(pose, pp, static_cast<int>(u), static_cast<int>(v));
      T* row = init.data() + (u * w + v) * 8;
      for (int i = 0; i < 3; ++i) row[i] = static_cast<T>(line.origin[static_cast<std::size_t>(i)]);
      for (int i = 0; i < 3; ++i)
        row[3 + i] = static_cast<T>(line.direction[static_cast<std::size_t>(i)]);
      row[6] = static_cast<T>(line.grid_u);
      row[7] = static_cast<T>(line.grid_v);
    }

  QueryGrid<T> q;
  q.init = Tensor<T>::from_data(Shape{h * w, 8}, std::move(init));
  q.lifted = mlp_forward(q.init, params, "photo.query_mlp", {8, 128, cfg.channels});
  return q;
}

template <typename T>
MemoryTokens<T> build_memory(const EncodedCloud<T>& enc, ParamSet<T>& params,
                             const PhotoConfig& cfg) {
  Tensor<T> cat = concat_cols(enc.features, enc.centers);
  Tensor<T> lifted = mlp_forward(cat, params, "photo.memory_mlp", {cfg.c3d + 3, cfg.channels});
  MemoryTokens<T> mem;
  mem.n = enc.features.shape()[0];
  mem.tokens = concat_rows(lifted, params.at("photo.pad"));
  return mem;
}

template <typename T>
Tensor<T> cross_attention_block(const Tensor<T>& q, const Tensor<T>& mem_tokens,
                                ParamSet<T>& params, const PhotoConfig& cfg, int layer,
                                PhotoForwardCtx<T>* ctx) {
  cfg.validate();
  if (q.shape()[1] != cfg.channels || mem_tokens.shape()[1] != cfg.channels)
    throw ConfigError("cross_attention_block: channel mismatch with config");
  const std::string base = "photo.layer" + std::to_string(layer);
  const Index c = cfg.channels;
  const Index dh = c / cfg.heads;
  const T scaling = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  Tensor<T> xn = layer_norm_rows(q, params.at(base + ".q_norm.gain"), params.at(base + ".q_norm.bias"));
  Tensor<T> mn = layer_norm_rows(mem_tokens, params.at(base + ".mem_norm.gain"),
                                 params.at(base + ".mem_norm.bias"));

  Tensor<T> qp = add_row_bias(matmul(xn, params.at(base + ".attn.wq.weight")),
                              params.at(base + ".attn.wq.bias"));
  Tensor<T> kp = add_row_bias(matmul(mn, params.at(base + ".attn.wk.weight")),
                              params.at(base + ".attn.wk.bias"));
  Tensor<T> vp = add_row_bias(matmul(mn, params.at(base + ".attn.wv.weight")),
                              params.at(base + ".attn.wv.bias"));

  Tensor<T> heads_out;
  for (int hI = 0; hI < cfg.heads; ++hI) {
    const Index c0 = hI * dh, c1 = (hI + 1) * dh;
    Tensor<T> qh = slice_cols(qp, c0, c1);
    Tensor<T> kh = slice_cols(kp, c0, c1);
    Tensor<T> vh = slice_cols(vp, c0, c1);
    Tensor<T> weights = softmax_rows(scale(matmul(qh, transpose(kh)), scaling));
    if (ctx != nullptr && ctx->attn_weights != nullptr) ctx->attn_weights->push_back(weights);
    Tensor<T> oh = matmul(weights, vh);
    heads_out = hI == 0 ? oh : concat_cols(heads_out, oh);
  }
  Tensor<T> attn_out = add_row_bias(matmul(heads_out, params.at(base + ".attn.wo.weight")),
                                    params.at(base + ".attn.wo.bias"));

  Tensor<T> kept = drop_path_branch(attn_out, ctx);
  Tensor<T> x = kept.defined() ? add(q, kept) : q;

  Tensor<T> x2 = layer_norm_rows(x, params.at(base + ".ffn_norm.gain"),
                                 params.at(base + ".ffn_norm.bias"));
  Tensor<T> ffn = mlp_forward(x2, params, base + ".ffn", {c, 4 * c, c});
  Tensor<T> kept2 = drop_path_branch(ffn, ctx);
  return kept2.defined() ? add(x, kept2) : x;
}

template <typename T>
Tensor<T> photograph_forward(const EncodedCloud<T>& enc, const Pose& pose,
                             const ProjectionParams& pp, ParamSet<T>& params,
                             const PhotoConfig& cfg, PhotoForwardCtx<T>* ctx) {
  cfg.validate();
  const Index h = cfg.grid_h, w = cfg.grid_w, c = cfg.channels;

  if (cfg.mode == PhotoMode::direct_projection) {
    MemoryTokens<T> mem = build_memory(enc, params, cfg);
    Tensor<T> feat = slice_rows(mem.tokens, 0, mem.n);

    // Project center coordinates through the same parallel projection the
    // queries would use, then snap to the nearest cell.
    const Index n = mem.n;
    std::vector<Vec3> centers(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      for (int d = 0; d < 3; ++d)
        centers[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] =
            static_cast<double>(enc.centers.value()[static_cast<std::size_t>(i * 3 + d)]);
    const std::vector<Vec3> rotated = rotate_points(centers, pose);
    const std::vector<GridPoint> proj = project_to_grid(rotated, pp);
    std::vector<Index> cells(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const auto gu = static_cast<Index>(std::lround(proj[static_cast<std::size_t>(i)].u));
      const auto gv = static_cast<Index>(std::lround(proj[static_cast<std::size_t>(i)].v));
      const Index cu = std::min(h - 1, std::max(Index(0), gu));
      const Index cv = std::min(w - 1, std::max(Index(0), gv));
      cells[static_cast<std::size_t>(i)] = cu * w + cv;
    }
    Tensor<T> grid = scatter_mean_rows(feat, cells, h * w, params.at("photo.pad"));
    return reshape(grid, Shape{h, w, c});
  }

  Tensor<T> q;
  if (cfg.mode == PhotoMode::cross_attention) {
    q = build_queries(pose, pp, params, cfg).lifted;
  } else {
    // Flattened pose matrix drives a per-grid query prediction.
    std::vector<T> flat(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) flat[static_cast<std::size_t>(i * 3 + j)] = static_cast<T>(pose.r(i, j));
    Tensor<T> pose_in = Tensor<T>::from_data(Shape{1, 9}, std::move(flat));
    Tensor<T> lifted = mlp_forward(pose_in, params, "photo.lq_mlp", {9, 128, h * w * c});
    q = reshape(lifted, Shape{h * w, c});
  }

  MemoryTokens<T> mem = build_memory(enc, params, cfg);
  for (int l = 0; l < cfg.layers; ++l)
    q = cross_attention_block(q, mem.tokens, params, cfg, l, ctx);
  return reshape(q, Shape{h, w, c});
}

#define TAP_INSTANTIATE_PHOTO(T)                                                               \
  template void register_photo_params(ParamSet<T>&, const PhotoConfig&);                       \
  template QueryGrid<T> build_queries(const Pose&, const ProjectionParams&, ParamSet<T>&,      \
                                      const PhotoConfig&);                                     \
  template MemoryTokens<T> build_memory(const EncodedCloud<T>&, ParamSet<T>&,                  \
                                        const PhotoConfig&);                                   \
  template Tensor<T> cross_attention_block(const Tensor<T>&, const Tensor<T>&, ParamSet<T>&,   \
                                           const PhotoConfig&, int, PhotoForwardCtx<T>*);      \
  template Tensor<T> photograph_forward(const EncodedCloud<T>&, const Pose&,                   \
                                        const ProjectionParams&, ParamSet<T>&,                 \
                                        const PhotoConfig&, PhotoForwardCtx<T>*);

TAP_INSTANTIATE_PHOTO(float)
TAP_INSTANTIATE_PHOTO(double)

#undef TAP_INSTANTIATE_PHOTO

}  // namespace tap
