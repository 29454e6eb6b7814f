#pragma once

// Independent brute-force oracles. Everything here is written as plain
// scalar loops against the raw data and must never call into the
// implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tap/geometry.hpp"
#include "tap/image.hpp"
#include "tap/pointcloud.hpp"
#include "tap/tensor.hpp"

namespace oracle {

// C[m x p] = A[m x k] * B[k x p], scalar triple loop.
template <typename T>
std::vector<T> matmul(const std::vector<T>& a, const std::vector<T>& b, int m, int k, int p) {
  std::vector<T> c(static_cast<std::size_t>(m) * p, T(0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) {
      T s = T(0);
      for (int t = 0; t < k; ++t) s += a[i * k + t] * b[t * p + j];
      c[i * p + j] = s;
    }
  return c;
}

// Affine+ReLU MLP, scalar loops. dims = {d0, d1, ..., dL}; weights[l] is
// d_l x d_{l+1} row-major, biases[l] length d_{l+1}. Final layer affine.
inline std::vector<double> mlp(const std::vector<double>& x, int rows,
                               const std::vector<int>& dims,
                               const std::vector<std::vector<double>>& weights,
                               const std::vector<std::vector<double>>& biases) {
  std::vector<double> h = x;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int din = dims[l], dout = dims[l + 1];
    std::vector<double> nxt(static_cast<std::size_t>(rows) * dout, 0.0);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < dout; ++j) {
        double s = biases[l][static_cast<std::size_t>(j)];
        for (int i = 0; i < din; ++i) s += h[r * din + i] * weights[l][i * dout + j];
        nxt[r * dout + j] = (l + 2 < dims.size() && s < 0.0) ? 0.0 : s;
      }
    h = std::move(nxt);
  }
  return h;
}

// Transposed convolution by scatter-accumulate. x: [h x w x cin] row-major,
// kernel: [k x k x cin x cout] row-major.
template <typename T>
std::vector<T> tconv2d(const std::vector<T>& x, const std::vector<T>& kernel, int h, int w,
                       int cin, int k, int cout, int stride, int pad, int out_pad, int* oh_out,
                       int* ow_out) {
  const int oh = (h - 1) * stride - 2 * pad + k + out_pad;
  const int ow = (w - 1) * stride - 2 * pad + k + out_pad;
  *oh_out = oh;
  *ow_out = ow;
  std::vector<T> out(static_cast<std::size_t>(oh) * ow * cout, T(0));
  for (int iy = 0; iy < h; ++iy)
    for (int ix = 0; ix < w; ++ix)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const int oy = iy * stride + ky - pad;
          const int ox = ix * stride + kx - pad;
          if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
          for (int ci = 0; ci < cin; ++ci)
            for (int co = 0; co < cout; ++co)
              out[(oy * ow + ox) * cout + co] +=
                  x[(iy * w + ix) * cin + ci] * kernel[((ky * k + kx) * cin + ci) * cout + co];
        }
  return out;
}

// Quadratic-time farthest point sampling: recompute every min-distance from
// scratch at each pick.
inline std::vector<tap::Index> fps(const std::vector<tap::Vec3>& pts, tap::Index n,
                                   tap::Index start) {
  std::vector<tap::Index> picked = {start};
  while (static_cast<tap::Index>(picked.size()) < n) {
    tap::Index best = -1;
    double best_d = -1.0;
    for (tap::Index i = 0; i < static_cast<tap::Index>(pts.size()); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (tap::Index s : picked) {
        const double dx = pts[i][0] - pts[s][0];
        const double dy = pts[i][1] - pts[s][1];
        const double dz = pts[i][2] - pts[s][2];
        d = std::min(d, dx * dx + dy * dy + dz * dz);
      }
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    picked.push_back(best);
  }
  return picked;
}

// All-pairs Chamfer distance.
inline double chamfer(const std::vector<tap::Vec3>& a, const std::vector<tap::Vec3>& b) {
  auto term = [](const std::vector<tap::Vec3>& from, const std::vector<tap::Vec3>& to) {
    double total = 0.0;
    for (const tap::Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const tap::Vec3& q : to) {
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        const double d = dx * dx + dy * dy + dz * dz;
        if (d < best) best = d;
      }
      total += best;
    }
    return total / static_cast<double>(from.size());
  };
  return term(a, b) + term(b, a);
}

// Per-pixel brute-force rasterizer: for each pixel, scan all points.
inline tap::ViewImage render(const tap::PointCloud& cloud, const tap::Pose& pose, int height,
                             int width, int splat_radius) {
  const auto rotated = tap::rotate_points(cloud.points, pose);
  const auto pp = tap::fit_projection(rotated, height, width, 0.1);
  const auto proj = tap::project_to_grid(rotated, pp);

  const double inf = std::numeric_limits<double>::infinity();
  const double r2 = static_cast<double>(splat_radius) * splat_radius;
  std::vector<double> zbuf(static_cast<std::size_t>(height) * width, inf);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double z = inf;
      for (const tap::GridPoint& gp : proj) {
        const double dy = y - gp.u, dx = x - gp.v;
        if (dy * dy + dx * dx > r2) continue;
        if (gp.depth < z) z = gp.depth;
      }
      zbuf[static_cast<std::size_t>(y * width + x)] = z;
    }

  double zmin = inf, zmax = -inf;
  for (double z : zbuf)
    if (z != inf) {
      zmin = std::min(zmin, z);
      zmax = std::max(zmax, z);
    }
  tap::ViewImage img = tap::ViewImage::white(height, width);
  const double span = zmax - zmin;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double z = zbuf[static_cast<std::size_t>(y * width + x)];
      if (z == inf) continue;
      const double shade = 0.15 + 0.7 * (span > 0.0 ? (z - zmin) / span : 0.5);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = shade;
      img.fg_mask[static_cast<std::size_t>(y * width + x)] = 1;
    }
  return img;
}

// Scalar AdamW trajectory for one weight under a fixed gradient sequence.
inline double adamw_scalar(double w, const std::vector<double>& grads, double lr, double wd,
                           double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
  double m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vhat = v / (1 - std::pow(b2, static_cast<double>(t)));
    w -= lr * (mhat / (std::sqrt(vhat) + eps)) + lr * wd * w;
  }
  return w;
}

}  // namespace oracle
