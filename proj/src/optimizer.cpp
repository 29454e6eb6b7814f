#include "tap/optimizer.hpp"

#include <cmath>

namespace tap {

template <typename T>
void adamw_step(ParamSet<T>& params, AdamState<T>& state, double lr, double weight_decay,
                const AdamConfig& cfg) {
  ++state.step;
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T eps = static_cast<T>(cfg.eps);
  const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));
  const T lrT = static_cast<T>(lr);
  const T wdT = static_cast<T>(weight_decay);

  for (auto& [name, t] : params) {
    if (t.grad().size() != t.value().size())
      throw ContractError("adamw_step: missing gradient for " + name);
    auto mi = state.m.find(name);
    auto vi = state.v.find(name);
    if (mi == state.m.end() || vi == state.v.end())
      throw ContractError("adamw_step: optimizer state missing for " + name);
    std::vector<T>& m = mi->second;
    std::vector<T>& v = vi->second;
    std::vector<T>& w = t.value();
    const std::vector<T>& g = t.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T mhat = m[i] / corr1;
      const T vhat = v[i] / corr2;
      w[i] -= lrT * (mhat / (std::sqrt(vhat) + eps)) + lrT * wdT * w[i];
    }
  }
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0, double lr_min,
                 std::int64_t warmup_steps) {
  if (step < 0 || step > total_steps) throw ContractError("cosine_lr: step outside [0, total]");
  if (warmup_steps > 0 && step < warmup_steps)
    return lr0 * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return step >= total_steps ? lr_min : lr0;
  const double t = static_cast<double>(step - warmup_steps) /
                   static_cast<double>(total_steps - warmup_steps);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(3.141592653589793238462643 * t));
}

template void adamw_step(ParamSet<float>&, AdamState<float>&, double, double, const AdamConfig&);
template void adamw_step(ParamSet<double>&, AdamState<double>&, double, double, const AdamConfig&);

}  // namespace tap
