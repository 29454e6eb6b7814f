#include "tap/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tap {

std::string Shape::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

namespace {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const EMat<T>>;
template <typename T>
using MapM = Eigen::Map<EMat<T>>;

template <typename T>
void check_positive_dims(const Shape& s, const char* who) {
  for (Index d : s.dims)
    if (d < 1) throw ShapeError(std::string(who) + ": non-positive extent in shape " + s.str());
}

template <typename T>
void check_rank2(const Tensor<T>& x, const char* who) {
  if (x.shape().rank() != 2)
    throw ShapeError(std::string(who) + ": expected rank-2 tensor, got " + x.shape().str());
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* who) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(who) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
}

// Builds the result node. Parent handles and the backward closure are only
// retained when some input is trainable, so inference graphs stay light.
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::initializer_list<Tensor<T>> parents,
                  std::function<void(TensorNode<T>&)> bwd) {
  check_positive_dims<T>(shape, "op result");
  auto n = std::make_shared<TensorNode<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.raw()->requires_grad;
  if (rg) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(bwd);
  }
  return Tensor<T>(std::move(n));
}

template <typename T>
void accum(TensorNode<T>* p, Index i, T v) {
  p->grad[static_cast<std::size_t>(i)] += v;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  std::vector<T> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  TensorNode<T>* pa = a.raw();
  TensorNode<T>* pb = b.raw();
  return make_op<T>(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode<T>& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  std::vector<T> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  TensorNode<T>* pa = a.raw();
  TensorNode<T>* pb = b.raw();
  return make_op<T>(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode<T>& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  std::vector<T> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  TensorNode<T>* pa = a.raw();
  TensorNode<T>* pb = b.raw();
  return make_op<T>(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode<T>& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pa->grad[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pb->grad[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  std::vector<T> out(x.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * x.value()[i];
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x}, [px](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      px->grad[i] += T(2) * px->value[i] * self.grad[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  std::vector<T> out(x.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x}, [px, s](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += s * self.grad[i];
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] > T(0) ? x.value()[i] : T(0);
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x}, [px](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (px->value[i] > T(0)) px->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  std::vector<T> out(x.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, x.value()[i]));
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x}, [px, lo, hi](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (px->value[i] >= lo && px->value[i] <= hi) px->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> log_elem(const Tensor<T>& x) {
  std::vector<T> out(x.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x.value()[i] > T(0)))
      throw NumericError("log of non-positive value " + std::to_string(x.value()[i]));
    out[i] = std::log(x.value()[i]);
  }
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x}, [px](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      px->grad[i] += self.grad[i] / px->value[i];
  });
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  check_rank2(x, "add_row_bias");
  check_rank2(bias, "add_row_bias");
  const Index r = x.shape()[0], c = x.shape()[1];
  if (bias.shape()[0] != 1 || bias.shape()[1] != c)
    throw ShapeError("add_row_bias: bias " + bias.shape().str() + " incompatible with " +
                     x.shape().str());
  std::vector<T> out(x.value().size());
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      out[static_cast<std::size_t>(i * c + j)] =
          x.value()[static_cast<std::size_t>(i * c + j)] + bias.value()[static_cast<std::size_t>(j)];
  TensorNode<T>* px = x.raw();
  TensorNode<T>* pb = bias.raw();
  return make_op<T>(x.shape(), std::move(out), {x, bias}, [px, pb, r, c](TensorNode<T>& self) {
    if (px->requires_grad) {
      px->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j)
          pb->grad[static_cast<std::size_t>(j)] += self.grad[static_cast<std::size_t>(i * c + j)];
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  const Index m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], p = b.shape()[1];
  if (k != k2)
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape().str() + " x " +
                     b.shape().str());
  std::vector<T> out(static_cast<std::size_t>(m * p));
  MapC<T> ma(a.value().data(), m, k);
  MapC<T> mb(b.value().data(), k, p);
  MapM<T> mo(out.data(), m, p);
  mo.noalias() = ma * mb;
  TensorNode<T>* pa = a.raw();
  TensorNode<T>* pb = b.raw();
  return make_op<T>(Shape{m, p}, std::move(out), {a, b}, [pa, pb, m, k, p](TensorNode<T>& self) {
    MapC<T> mg(self.grad.data(), m, p);
    if (pa->requires_grad) {
      pa->ensure_grad();
      MapC<T> mb2(pb->value.data(), k, p);
      MapM<T> ga(pa->grad.data(), m, k);
      ga.noalias() += mg * mb2.transpose();
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      MapC<T> ma2(pa->value.data(), m, k);
      MapM<T> gb(pb->grad.data(), k, p);
      gb.noalias() += ma2.transpose() * mg;
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  check_rank2(x, "transpose");
  const Index r = x.shape()[0], c = x.shape()[1];
  std::vector<T> out(x.value().size());
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      out[static_cast<std::size_t>(j * r + i)] = x.value()[static_cast<std::size_t>(i * c + j)];
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{c, r}, std::move(out), {x}, [px, r, c](TensorNode<T>& self) {
    px->ensure_grad();
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j)
        px->grad[static_cast<std::size_t>(i * c + j)] += self.grad[static_cast<std::size_t>(j * r + i)];
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  check_rank2(x, "softmax_rows");
  const Index r = x.shape()[0], c = x.shape()[1];
  for (T v : x.value())
    if (!std::isfinite(v)) throw NumericError("softmax_rows: non-finite input");
  std::vector<T> out(x.value().size());
  for (Index i = 0; i < r; ++i) {
    const T* row = x.value().data() + i * c;
    T* orow = out.data() + i * c;
    T mx = row[0];
    for (Index j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T sum = T(0);
    for (Index j = 0; j < c; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (Index j = 0; j < c; ++j) orow[j] /= sum;
  }
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x}, [px, r, c](TensorNode<T>& self) {
    px->ensure_grad();
    for (Index i = 0; i < r; ++i) {
      const T* y = self.value.data() + i * c;
      const T* dy = self.grad.data() + i * c;
      T dot = T(0);
      for (Index j = 0; j < c; ++j) dot += dy[j] * y[j];
      T* dx = px->grad.data() + i * c;
      for (Index j = 0; j < c; ++j) dx[j] += (dy[j] - dot) * y[j];
    }
  });
}

template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                          T eps) {
  check_rank2(x, "layer_norm_rows");
  const Index r = x.shape()[0], c = x.shape()[1];
  if (gain.shape() != Shape{1, c} || bias.shape() != Shape{1, c})
    throw ShapeError("layer_norm_rows: gain/bias must be [1x" + std::to_string(c) + "]");
  std::vector<T> out(x.value().size());
  std::vector<T> rstd(static_cast<std::size_t>(r));
  std::vector<T> mean(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) {
    const T* row = x.value().data() + i * c;
    T m = T(0);
    for (Index j = 0; j < c; ++j) m += row[j];
    m /= static_cast<T>(c);
    T var = T(0);
    for (Index j = 0; j < c; ++j) var += (row[j] - m) * (row[j] - m);
    var /= static_cast<T>(c);
    const T rs = T(1) / std::sqrt(var + eps);
    mean[static_cast<std::size_t>(i)] = m;
    rstd[static_cast<std::size_t>(i)] = rs;
    T* orow = out.data() + i * c;
    for (Index j = 0; j < c; ++j)
      orow[j] = (row[j] - m) * rs * gain.value()[static_cast<std::size_t>(j)] +
                bias.value()[static_cast<std::size_t>(j)];
  }
  TensorNode<T>* px = x.raw();
  TensorNode<T>* pg = gain.raw();
  TensorNode<T>* pb = bias.raw();
  return make_op<T>(
      x.shape(), std::move(out), {x, gain, bias},
      [px, pg, pb, r, c, mean = std::move(mean), rstd = std::move(rstd)](TensorNode<T>& self) {
        std::vector<T> xhat(static_cast<std::size_t>(c));
        for (Index i = 0; i < r; ++i) {
          const T* row = px->value.data() + i * c;
          const T* dy = self.grad.data() + i * c;
          const T m = mean[static_cast<std::size_t>(i)];
          const T rs = rstd[static_cast<std::size_t>(i)];
          for (Index j = 0; j < c; ++j) xhat[static_cast<std::size_t>(j)] = (row[j] - m) * rs;
          if (pg->requires_grad) {
            pg->ensure_grad();
            for (Index j = 0; j < c; ++j)
              pg->grad[static_cast<std::size_t>(j)] += dy[j] * xhat[static_cast<std::size_t>(j)];
          }
          if (pb->requires_grad) {
            pb->ensure_grad();
            for (Index j = 0; j < c; ++j) pb->grad[static_cast<std::size_t>(j)] += dy[j];
          }
          if (px->requires_grad) {
            px->ensure_grad();
            T m1 = T(0), m2 = T(0);
            for (Index j = 0; j < c; ++j) {
              const T g = dy[j] * pg->value[static_cast<std::size_t>(j)];
              m1 += g;
              m2 += g * xhat[static_cast<std::size_t>(j)];
            }
            m1 /= static_cast<T>(c);
            m2 /= static_cast<T>(c);
            T* dx = px->grad.data() + i * c;
            for (Index j = 0; j < c; ++j) {
              const T g = dy[j] * pg->value[static_cast<std::size_t>(j)];
              dx[j] += rs * (g - m1 - xhat[static_cast<std::size_t>(j)] * m2);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps) {
  check_rank2(x, "l2_normalize_rows");
  const Index r = x.shape()[0], c = x.shape()[1];
  std::vector<T> out(x.value().size());
  std::vector<T> norms(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) {
    const T* row = x.value().data() + i * c;
    T s = T(0);
    for (Index j = 0; j < c; ++j) s += row[j] * row[j];
    const T n = std::sqrt(s);
    norms[static_cast<std::size_t>(i)] = n;
    const T d = std::max(n, eps);
    for (Index j = 0; j < c; ++j) out[static_cast<std::size_t>(i * c + j)] = row[j] / d;
  }
  TensorNode<T>* px = x.raw();
  return make_op<T>(x.shape(), std::move(out), {x},
                    [px, r, c, eps, norms = std::move(norms)](TensorNode<T>& self) {
                      px->ensure_grad();
                      for (Index i = 0; i < r; ++i) {
                        const T n = norms[static_cast<std::size_t>(i)];
                        const T* dy = self.grad.data() + i * c;
                        T* dx = px->grad.data() + i * c;
                        if (n > eps) {
                          const T* y = self.value.data() + i * c;
                          T dot = T(0);
                          for (Index j = 0; j < c; ++j) dot += dy[j] * y[j];
                          for (Index j = 0; j < c; ++j) dx[j] += (dy[j] - y[j] * dot) / n;
                        } else {
                          for (Index j = 0; j < c; ++j) dx[j] += dy[j] / eps;
                        }
                      }
                    });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<Index>& rows) {
  check_rank2(x, "gather_rows");
  const Index n = x.shape()[0], c = x.shape()[1];
  for (Index r : rows)
    if (r < 0 || r >= n) throw ContractError("gather_rows: index " + std::to_string(r) + " out of range");
  const Index m = static_cast<Index>(rows.size());
  std::vector<T> out(static_cast<std::size_t>(m * c));
  for (Index i = 0; i < m; ++i)
    std::copy_n(x.value().data() + rows[static_cast<std::size_t>(i)] * c, c, out.data() + i * c);
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{m, c}, std::move(out), {x}, [px, c, rows](TensorNode<T>& self) {
    px->ensure_grad();
    const Index m2 = static_cast<Index>(rows.size());
    for (Index i = 0; i < m2; ++i) {
      const T* dy = self.grad.data() + i * c;
      T* dx = px->grad.data() + rows[static_cast<std::size_t>(i)] * c;
      for (Index j = 0; j < c; ++j) dx[j] += dy[j];
    }
  });
}

template <typename T>
Tensor<T> group_rows_max(const Tensor<T>& x, const std::vector<Index>& groups, Index n, Index k) {
  check_rank2(x, "group_rows_max");
  const Index rows = x.shape()[0], c = x.shape()[1];
  if (static_cast<Index>(groups.size()) != n * k)
    throw ContractError("group_rows_max: expected " + std::to_string(n * k) + " indices");
  for (Index r : groups)
    if (r < 0 || r >= rows) throw ContractError("group_rows_max: index out of range");
  std::vector<T> out(static_cast<std::size_t>(n * c));
  std::vector<Index> arg(static_cast<std::size_t>(n * c));
  for (Index g = 0; g < n; ++g) {
    for (Index j = 0; j < c; ++j) {
      Index best = groups[static_cast<std::size_t>(g * k)];
      T bv = x.value()[static_cast<std::size_t>(best * c + j)];
      for (Index t = 1; t < k; ++t) {
        const Index r = groups[static_cast<std::size_t>(g * k + t)];
        const T v = x.value()[static_cast<std::size_t>(r * c + j)];
        if (v > bv) {
          bv = v;
          best = r;
        }
      }
      out[static_cast<std::size_t>(g * c + j)] = bv;
      arg[static_cast<std::size_t>(g * c + j)] = best;
    }
  }
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{n, c}, std::move(out), {x},
                    [px, n, c, arg = std::move(arg)](TensorNode<T>& self) {
                      px->ensure_grad();
                      for (Index g = 0; g < n; ++g)
                        for (Index j = 0; j < c; ++j)
                          px->grad[static_cast<std::size_t>(arg[static_cast<std::size_t>(g * c + j)] * c + j)] +=
                              self.grad[static_cast<std::size_t>(g * c + j)];
                    });
}

template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  check_rank2(a, "concat_rows");
  check_rank2(b, "concat_rows");
  if (a.shape()[1] != b.shape()[1])
    throw ShapeError("concat_rows: column mismatch " + a.shape().str() + " vs " + b.shape().str());
  const Index ra = a.shape()[0], rb = b.shape()[0], c = a.shape()[1];
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>((ra + rb) * c));
  out.insert(out.end(), a.value().begin(), a.value().end());
  out.insert(out.end(), b.value().begin(), b.value().end());
  TensorNode<T>* pa = a.raw();
  TensorNode<T>* pb = b.raw();
  return make_op<T>(Shape{ra + rb, c}, std::move(out), {a, b}, [pa, pb, ra, rb, c](TensorNode<T>& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (Index i = 0; i < ra * c; ++i) pa->grad[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(i)];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (Index i = 0; i < rb * c; ++i)
        pb->grad[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(ra * c + i)];
    }
  });
}

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  check_rank2(a, "concat_cols");
  check_rank2(b, "concat_cols");
  if (a.shape()[0] != b.shape()[0])
    throw ShapeError("concat_cols: row mismatch " + a.shape().str() + " vs " + b.shape().str());
  const Index r = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  std::vector<T> out(static_cast<std::size_t>(r * (ca + cb)));
  for (Index i = 0; i < r; ++i) {
    std::copy_n(a.value().data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(b.value().data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  TensorNode<T>* pa = a.raw();
  TensorNode<T>* pb = b.raw();
  return make_op<T>(Shape{r, ca + cb}, std::move(out), {a, b}, [pa, pb, r, ca, cb](TensorNode<T>& self) {
    const Index c = ca + cb;
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < ca; ++j)
          pa->grad[static_cast<std::size_t>(i * ca + j)] += self.grad[static_cast<std::size_t>(i * c + j)];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < cb; ++j)
          pb->grad[static_cast<std::size_t>(i * cb + j)] += self.grad[static_cast<std::size_t>(i * c + ca + j)];
    }
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, Index c0, Index c1) {
  check_rank2(x, "slice_cols");
  const Index r = x.shape()[0], c = x.shape()[1];
  if (c0 < 0 || c1 <= c0 || c1 > c)
    throw ContractError("slice_cols: bad range [" + std::to_string(c0) + "," + std::to_string(c1) +
                        ") for " + x.shape().str());
  const Index w = c1 - c0;
  std::vector<T> out(static_cast<std::size_t>(r * w));
  for (Index i = 0; i < r; ++i)
    std::copy_n(x.value().data() + i * c + c0, w, out.data() + i * w);
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{r, w}, std::move(out), {x}, [px, r, c, c0, w](TensorNode<T>& self) {
    px->ensure_grad();
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < w; ++j)
        px->grad[static_cast<std::size_t>(i * c + c0 + j)] += self.grad[static_cast<std::size_t>(i * w + j)];
  });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, Index r0, Index r1) {
  check_rank2(x, "slice_rows");
  const Index r = x.shape()[0], c = x.shape()[1];
  if (r0 < 0 || r1 <= r0 || r1 > r)
    throw ContractError("slice_rows: bad range [" + std::to_string(r0) + "," + std::to_string(r1) +
                        ") for " + x.shape().str());
  const Index h = r1 - r0;
  std::vector<T> out(x.value().begin() + r0 * c, x.value().begin() + r1 * c);
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{h, c}, std::move(out), {x}, [px, r0, c, h](TensorNode<T>& self) {
    px->ensure_grad();
    for (Index i = 0; i < h * c; ++i)
      px->grad[static_cast<std::size_t>(r0 * c + i)] += self.grad[static_cast<std::size_t>(i)];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& s) {
  if (s.numel() != x.numel())
    throw ShapeError("reshape: cannot view " + x.shape().str() + " as " + s.str());
  std::vector<T> out = x.value();
  TensorNode<T>* px = x.raw();
  return make_op<T>(s, std::move(out), {x}, [px](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> col_max(const Tensor<T>& x) {
  check_rank2(x, "col_max");
  const Index r = x.shape()[0], c = x.shape()[1];
  std::vector<T> out(static_cast<std::size_t>(c));
  std::vector<Index> arg(static_cast<std::size_t>(c), 0);
  for (Index j = 0; j < c; ++j) {
    T bv = x.value()[static_cast<std::size_t>(j)];
    Index bi = 0;
    for (Index i = 1; i < r; ++i) {
      const T v = x.value()[static_cast<std::size_t>(i * c + j)];
      if (v > bv) {
        bv = v;
        bi = i;
      }
    }
    out[static_cast<std::size_t>(j)] = bv;
    arg[static_cast<std::size_t>(j)] = bi;
  }
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{1, c}, std::move(out), {x}, [px, c, arg = std::move(arg)](TensorNode<T>& self) {
    px->ensure_grad();
    for (Index j = 0; j < c; ++j)
      px->grad[static_cast<std::size_t>(arg[static_cast<std::size_t>(j)] * c + j)] +=
          self.grad[static_cast<std::size_t>(j)];
  });
}

template <typename T>
Tensor<T> col_mean(const Tensor<T>& x) {
  check_rank2(x, "col_mean");
  const Index r = x.shape()[0], c = x.shape()[1];
  std::vector<T> out(static_cast<std::size_t>(c), T(0));
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out[static_cast<std::size_t>(j)] += x.value()[static_cast<std::size_t>(i * c + j)];
  for (Index j = 0; j < c; ++j) out[static_cast<std::size_t>(j)] /= static_cast<T>(r);
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{1, c}, std::move(out), {x}, [px, r, c](TensorNode<T>& self) {
    px->ensure_grad();
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j)
        px->grad[static_cast<std::size_t>(i * c + j)] += self.grad[static_cast<std::size_t>(j)] / static_cast<T>(r);
  });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T s = T(0);
  for (T v : x.value()) s += v;
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{1}, {s}, {x}, [px](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  T s = T(0);
  for (T v : x.value()) s += v;
  const T n = static_cast<T>(x.numel());
  TensorNode<T>* px = x.raw();
  return make_op<T>(Shape{1}, {s / n}, {x}, [px, n](TensorNode<T>& self) {
    px->ensure_grad();
    for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += self.grad[0] / n;
  });
}

template <typename T>
Tensor<T> scatter_mean_rows(const Tensor<T>& src, const std::vector<Index>& cell, Index cells,
                            const Tensor<T>& fill) {
  check_rank2(src, "scatter_mean_rows");
  check_rank2(fill, "scatter_mean_rows");
  const Index n = src.shape()[0], c = src.shape()[1];
  if (fill.shape() != Shape{1, c})
    throw ShapeError("scatter_mean_rows: fill must be [1x" + std::to_string(c) + "]");
  if (static_cast<Index>(cell.size()) != n)
    throw ContractError("scatter_mean_rows: one cell index per source row required");
  for (Index ci : cell)
    if (ci < 0 || ci >= cells) throw ContractError("scatter_mean_rows: cell index out of range");
  std::vector<Index> count(static_cast<std::size_t>(cells), 0);
  std::vector<T> out(static_cast<std::size_t>(cells * c), T(0));
  for (Index i = 0; i < n; ++i) {
    ++count[static_cast<std::size_t>(cell[static_cast<std::size_t>(i)])];
    const T* s = src.value().data() + i * c;
    T* o = out.data() + cell[static_cast<std::size_t>(i)] * c;
    for (Index j = 0; j < c; ++j) o[j] += s[j];
  }
  for (Index g = 0; g < cells; ++g) {
    T* o = out.data() + g * c;
    const Index k = count[static_cast<std::size_t>(g)];
    if (k > 0) {
      for (Index j = 0; j < c; ++j) o[j] /= static_cast<T>(k);
    } else {
      std::copy_n(fill.value().data(), c, o);
    }
  }
  TensorNode<T>* ps = src.raw();
  TensorNode<T>* pf = fill.raw();
  return make_op<T>(Shape{cells, c}, std::move(out), {src, fill},
                    [ps, pf, n, c, cells, cell, count = std::move(count)](TensorNode<T>& self) {
                      if (ps->requires_grad) {
                        ps->ensure_grad();
                        for (Index i = 0; i < n; ++i) {
                          const Index g = cell[static_cast<std::size_t>(i)];
                          const T* dy = self.grad.data() + g * c;
                          T* dx = ps->grad.data() + i * c;
                          const T k = static_cast<T>(count[static_cast<std::size_t>(g)]);
                          for (Index j = 0; j < c; ++j) dx[j] += dy[j] / k;
                        }
                      }
                      if (pf->requires_grad) {
                        pf->ensure_grad();
                        for (Index g = 0; g < cells; ++g)
                          if (count[static_cast<std::size_t>(g)] == 0) {
                            const T* dy = self.grad.data() + g * c;
                            for (Index j = 0; j < c; ++j) pf->grad[static_cast<std::size_t>(j)] += dy[j];
                          }
                      }
                    });
}

namespace {

// Packs a [k x k x c_in x c_out] kernel into the [c_in x k*k*c_out] matrix
// used by the GEMM formulation of the transposed convolution.
template <typename T>
std::vector<T> pack_kernel(const std::vector<T>& kval, Index k, Index cin, Index cout) {
  std::vector<T> wp(static_cast<std::size_t>(cin * k * k * cout));
  for (Index ky = 0; ky < k; ++ky)
    for (Index kx = 0; kx < k; ++kx)
      for (Index ci = 0; ci < cin; ++ci)
        for (Index co = 0; co < cout; ++co)
          wp[static_cast<std::size_t>(ci * (k * k * cout) + (ky * k + kx) * cout + co)] =
              kval[static_cast<std::size_t>(((ky * k + kx) * cin + ci) * cout + co)];
  return wp;
}

}  // namespace

template <typename T>
Tensor<T> tconv2d(const Tensor<T>& x, const Tensor<T>& kernel, int stride, int pad, int out_pad) {
  if (x.shape().rank() != 3)
    throw ShapeError("tconv2d: input must be [h x w x c_in], got " + x.shape().str());
  if (kernel.shape().rank() != 4 || kernel.shape()[0] != kernel.shape()[1])
    throw ShapeError("tconv2d: kernel must be [k x k x c_in x c_out], got " + kernel.shape().str());
  if (stride < 1) throw ConfigError("tconv2d: stride must be >= 1");
  if (pad < 0) throw ConfigError("tconv2d: pad must be >= 0");
  if (out_pad < 0 || out_pad >= stride)
    throw ConfigError("tconv2d: out_pad must satisfy 0 <= out_pad < stride");
  const Index h = x.shape()[0], w = x.shape()[1], cin = x.shape()[2];
  const Index k = kernel.shape()[0], kcin = kernel.shape()[2], cout = kernel.shape()[3];
  if (cin != kcin)
    throw ShapeError("tconv2d: channel mismatch, input " + x.shape().str() + " vs kernel " +
                     kernel.shape().str());
  const Index oh = (h - 1) * stride - 2 * pad + k + out_pad;
  const Index ow = (w - 1) * stride - 2 * pad + k + out_pad;
  if (oh <= 0 || ow <= 0)
    throw ConfigError("tconv2d: non-positive output extent " + std::to_string(oh) + "x" +
                      std::to_string(ow));

  // cols = x2 * Wp, then col2im scatter into the output grid.
  const std::vector<T> wp = pack_kernel(kernel.value(), k, cin, cout);
  std::vector<T> cols(static_cast<std::size_t>(h * w * k * k * cout));
  {
    MapC<T> mx(x.value().data(), h * w, cin);
    MapC<T> mw(wp.data(), cin, k * k * cout);
    MapM<T> mc(cols.data(), h * w, k * k * cout);
    mc.noalias() = mx * mw;
  }
  std::vector<T> out(static_cast<std::size_t>(oh * ow * cout), T(0));
  for (Index iy = 0; iy < h; ++iy)
    for (Index ix = 0; ix < w; ++ix) {
      const T* crow = cols.data() + (iy * w + ix) * (k * k * cout);
      for (Index ky = 0; ky < k; ++ky) {
        const Index oy = iy * stride + ky - pad;
        if (oy < 0 || oy >= oh) continue;
        for (Index kx = 0; kx < k; ++kx) {
          const Index ox = ix * stride + kx - pad;
          if (ox < 0 || ox >= ow) continue;
          T* orow = out.data() + (oy * ow + ox) * cout;
          const T* src = crow + (ky * k + kx) * cout;
          for (Index co = 0; co < cout; ++co) orow[co] += src[co];
        }
      }
    }

  TensorNode<T>* px = x.raw();
  TensorNode<T>* pk = kernel.raw();
  return make_op<T>(
      Shape{oh, ow, cout}, std::move(out), {x, kernel},
      [px, pk, h, w, cin, k, cout, oh, ow, stride, pad](TensorNode<T>& self) {
        // im2col of the output gradient mirrors the forward scatter.
        std::vector<T> gcols(static_cast<std::size_t>(h * w * k * k * cout), T(0));
        for (Index iy = 0; iy < h; ++iy)
          for (Index ix = 0; ix < w; ++ix) {
            T* crow = gcols.data() + (iy * w + ix) * (k * k * cout);
            for (Index ky = 0; ky < k; ++ky) {
              const Index oy = iy * stride + ky - pad;
              if (oy < 0 || oy >= oh) continue;
              for (Index kx = 0; kx < k; ++kx) {
                const Index ox = ix * stride + kx - pad;
                if (ox < 0 || ox >= ow) continue;
                const T* grow = self.grad.data() + (oy * ow + ox) * cout;
                T* dst = crow + (ky * k + kx) * cout;
                for (Index co = 0; co < cout; ++co) dst[co] += grow[co];
              }
            }
          }
        if (px->requires_grad) {
          px->ensure_grad();
          const std::vector<T> wp = pack_kernel(pk->value, k, cin, cout);
          MapC<T> mg(gcols.data(), h * w, k * k * cout);
          MapC<T> mw(wp.data(), cin, k * k * cout);
          MapM<T> mdx(px->grad.data(), h * w, cin);
          mdx.noalias() += mg * mw.transpose();
        }
        if (pk->requires_grad) {
          pk->ensure_grad();
          std::vector<T> gwp(static_cast<std::size_t>(cin * k * k * cout), T(0));
          MapC<T> mx(px->value.data(), h * w, cin);
          MapC<T> mg(gcols.data(), h * w, k * k * cout);
          MapM<T> mgw(gwp.data(), cin, k * k * cout);
          mgw.noalias() = mx.transpose() * mg;
          for (Index ky = 0; ky < k; ++ky)
            for (Index kx = 0; kx < k; ++kx)
              for (Index ci = 0; ci < cin; ++ci)
                for (Index co = 0; co < cout; ++co)
                  pk->grad[static_cast<std::size_t>(((ky * k + kx) * cin + ci) * cout + co)] +=
                      gwp[static_cast<std::size_t>(ci * (k * k * cout) + (ky * k + kx) * cout + co)];
        }
      });
}

template <typename T>
Tensor<T> mlp_forward(const Tensor<T>& x, ParamSet<T>& params, const std::string& prefix,
                      const std::vector<Index>& layer_dims) {
  if (layer_dims.size() < 2) throw ConfigError("mlp_forward: layer_dims needs at least in/out");
  check_rank2(x, "mlp_forward");
  if (x.shape()[1] != layer_dims.front())
    throw ShapeError("mlp_forward: input width " + std::to_string(x.shape()[1]) +
                     " does not match layer_dims[0]=" + std::to_string(layer_dims.front()));
  Tensor<T> h = x;
  const std::size_t layers = layer_dims.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    Tensor<T>& wgt = params.at(base + ".weight");
    Tensor<T>& bias = params.at(base + ".bias");
    if (wgt.shape() != Shape{layer_dims[l], layer_dims[l + 1]})
      throw ConfigError("mlp_forward: " + base + ".weight has shape " + wgt.shape().str() +
                        ", expected [" + std::to_string(layer_dims[l]) + "x" +
                        std::to_string(layer_dims[l + 1]) + "]");
    h = add_row_bias(matmul(h, wgt), bias);
    if (l + 1 < layers) h = relu(h);
  }
  return h;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1)
    throw ContractError("backward: loss must be scalar, got " + loss.shape().str());
  if (!loss.raw()->requires_grad) return;

  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
  stack.emplace_back(loss.raw(), 0);
  visited.insert(loss.raw());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->parents.size()) {
      TensorNode<T>* p = top.first->parents[top.second++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(top.first);
      stack.pop_back();
    }
  }

  loss.raw()->ensure_grad();
  loss.raw()->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* n = *it;
    n->ensure_grad();
    if (n->backward_fn) n->backward_fn(*n);
  }
}

#define TAP_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> square(const Tensor<T>&);                                                   \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                              \
  template Tensor<T> log_elem(const Tensor<T>&);                                                 \
  template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> transpose(const Tensor<T>&);                                                \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                             \
  template Tensor<T> layer_norm_rows(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);   \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&, T);                                     \
  template Tensor<T> gather_rows(const Tensor<T>&, const std::vector<Index>&);                   \
  template Tensor<T> group_rows_max(const Tensor<T>&, const std::vector<Index>&, Index, Index);  \
  template Tensor<T> concat_rows(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> concat_cols(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> slice_cols(const Tensor<T>&, Index, Index);                                 \
  template Tensor<T> slice_rows(const Tensor<T>&, Index, Index);                                 \
  template Tensor<T> reshape(const Tensor<T>&, const Shape&);                                    \
  template Tensor<T> col_max(const Tensor<T>&);                                                  \
  template Tensor<T> col_mean(const Tensor<T>&);                                                 \
  template Tensor<T> sum_all(const Tensor<T>&);                                                  \
  template Tensor<T> mean_all(const Tensor<T>&);                                                 \
  template Tensor<T> scatter_mean_rows(const Tensor<T>&, const std::vector<Index>&, Index,       \
                                       const Tensor<T>&);                                        \
  template Tensor<T> tconv2d(const Tensor<T>&, const Tensor<T>&, int, int, int);                 \
  template Tensor<T> mlp_forward(const Tensor<T>&, ParamSet<T>&, const std::string&,             \
                                 const std::vector<Index>&);                                     \
  template void backward(const Tensor<T>&);

TAP_INSTANTIATE_OPS(float)
TAP_INSTANTIATE_OPS(double)

#undef TAP_INSTANTIATE_OPS

}  // namespace tap
