#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tap/tensor.hpp"

namespace tap {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::map<std::string, std::vector<T>> m;
  std::map<std::string, std::vector<T>> v;
  std::int64_t step = 0;

  void init(const ParamSet<T>& params) {
    m.clear();
    v.clear();
    step = 0;
    for (const auto& [name, t] : params) {
      m[name].assign(t.value().size(), T(0));
      v[name].assign(t.value().size(), T(0));
    }
  }
};

// One AdamW update over every parameter (lexicographic order). Weight decay
// is decoupled: both the adaptive step and lr*wd*w subtract from the
// pre-update weights. Gradients must be populated.
template <typename T>
void adamw_step(ParamSet<T>& params, AdamState<T>& state, double lr, double weight_decay,
                const AdamConfig& cfg = {});

// Linear warmup from 0 to lr0 over warmup_steps, then cosine annealing from
// lr0 down to lr_min at total_steps.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0, double lr_min,
                 std::int64_t warmup_steps);

}  // namespace tap
