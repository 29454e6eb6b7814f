#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tap/errors.hpp"

namespace tap {

using Index = std::int64_t;

// Dense row-major shape. Rank is small (<= 4 in practice).
struct Shape {
  std::vector<Index> dims;

  Shape() = default;
  Shape(std::initializer_list<Index> d) : dims(d) {}
  explicit Shape(std::vector<Index> d) : dims(std::move(d)) {}

  Index numel() const {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
  }
  std::size_t rank() const { return dims.size(); }
  Index operator[](std::size_t i) const { return dims[i]; }
  bool operator==(const Shape& o) const { return dims == o.dims; }
  bool operator!=(const Shape& o) const { return dims != o.dims; }
  std::string str() const;
};

template <typename T>
class Tensor;

// One node of the computation graph. Tensors are immutable after
// construction except for gradient accumulation; `parents` plus
// `backward_fn` form the recorded tape.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  std::function<void(TensorNode<T>&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

// Shared handle to a graph node. Copies alias the same storage.
template <typename T>
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode<T>> n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& s) { return filled(s, T(0)); }

  static Tensor filled(const Shape& s, T v) {
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = s;
    n->value.assign(static_cast<std::size_t>(s.numel()), v);
    return Tensor(std::move(n));
  }

  static Tensor from_data(const Shape& s, std::vector<T> data) {
    if (static_cast<Index>(data.size()) != s.numel())
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + s.str());
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = s;
    n->value = std::move(data);
    return Tensor(std::move(n));
  }

  static Tensor scalar(T v) { return filled(Shape{1}, v); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index numel() const { return node_->shape.numel(); }

  std::vector<T>& value() { return node_->value; }
  const std::vector<T>& value() const { return node_->value; }
  std::vector<T>& grad() { return node_->grad; }
  const std::vector<T>& grad() const { return node_->grad; }

  T item() const {
    if (node_->shape.numel() != 1)
      throw ContractError("item() on non-scalar tensor of shape " + node_->shape.str());
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    node_->requires_grad = v;
    return *this;
  }

  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  std::shared_ptr<TensorNode<T>> node() const { return node_; }
  TensorNode<T>* raw() const { return node_.get(); }

private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Ordered map of trainable tensors. std::map keeps lexicographic iteration.
template <typename T>
class ParamSet {
public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    auto [it, inserted] = params_.emplace(name, std::move(t));
    if (!inserted) throw ConfigError("duplicate parameter name: " + name);
    it->second.set_requires_grad(true);
    return it->second;
  }

  Tensor<T>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("missing parameter: " + name);
    return it->second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("missing parameter: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
  }

  Index total_elements() const {
    Index n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

private:
  std::map<std::string, Tensor<T>> params_;
};

// ---- operation set ----
// Forward passes are bitwise deterministic for fixed inputs. Every op with
// requires_grad inputs records a backward closure on the result node.

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> square(const Tensor<T>& x);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s);
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);
template <typename T>
Tensor<T> log_elem(const Tensor<T>& x);

// x: [r x c], bias: [1 x c] broadcast over rows (the only broadcast we allow).
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x);

// Per-row LayerNorm with affine parameters. gain/bias: [1 x c].
template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& x, const Tensor<T>& gain,
                          const Tensor<T>& bias, T eps = T(1e-5));

// Per-row L2 normalization: y_i = x_i / max(||x_i||, eps).
template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps = T(1e-12));

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<Index>& rows);

// groups: flat n*k row indices into x; output [n x c] is the per-group,
// per-column max. Gradient routes to the argmax row (first on ties).
template <typename T>
Tensor<T> group_rows_max(const Tensor<T>& x, const std::vector<Index>& groups,
                         Index n, Index k);

template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, Index c0, Index c1);
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, Index r0, Index r1);

// Copy with a new shape; numel must match.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& s);

// Column-wise max / mean over rows: [r x c] -> [1 x c].
template <typename T>
Tensor<T> col_max(const Tensor<T>& x);
template <typename T>
Tensor<T> col_mean(const Tensor<T>& x);

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);
template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);

// Scatter rows of src into a [cells x c] grid by cell index, mean-pooling
// collisions; cells with no row receive the (learnable) fill row.
template <typename T>
Tensor<T> scatter_mean_rows(const Tensor<T>& src, const std::vector<Index>& cell,
                            Index cells, const Tensor<T>& fill);

// Transposed 2D convolution. x: [h x w x c_in], kernel: [k x k x c_in x c_out].
// Output extent: (h-1)*stride - 2*pad + k + out_pad (must be positive).
template <typename T>
Tensor<T> tconv2d(const Tensor<T>& x, const Tensor<T>& kernel, int stride,
                  int pad, int out_pad);

// Multi-layer perceptron over parameters named <prefix>.l<i>.weight/.bias.
// Hidden layers use ReLU, the final layer stays affine. layer_dims lists
// d_in, hidden..., d_out.
template <typename T>
Tensor<T> mlp_forward(const Tensor<T>& x, ParamSet<T>& params,
                      const std::string& prefix, const std::vector<Index>& layer_dims);

// Reverse-mode sweep from a scalar loss. Populates grad on every trainable
// tensor reachable from `loss`; accumulates into pre-existing grads.
template <typename T>
void backward(const Tensor<T>& loss);

}  // namespace tap
