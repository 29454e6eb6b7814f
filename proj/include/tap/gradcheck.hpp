#pragma once

#include <functional>
#include <string>

#include "tap/rng.hpp"
#include "tap/tensor.hpp"

namespace tap {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  Index worst_element = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t elements_checked = 0;

  std::string str() const;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Elements sampled per tensor (all elements when the tensor is smaller).
  Index samples_per_tensor = 64;
  std::uint64_t seed = 0;
};

// Compares reverse-mode gradients against central finite differences.
// `f` must rebuild its graph from the live parameter values on every call
// and be deterministic. Relative error uses max(1, |analytic|, |numeric|)
// as denominator so near-zero gradients are compared absolutely.
template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>(ParamSet<T>&)>& f, ParamSet<T>& params,
                           const GradCheckOptions& opts = {});

}  // namespace tap
