#include "tap/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tap {

std::string GradCheckReport::str() const {
  std::ostringstream os;
  os << "max_rel_err=" << max_rel_err << " worst=" << (worst_param.empty() ? "-" : worst_param)
     << "[" << worst_element << "]"
     << " analytic=" << worst_analytic << " numeric=" << worst_numeric
     << " checked=" << elements_checked;
  return os.str();
}

template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>(ParamSet<T>&)>& f, ParamSet<T>& params,
                           const GradCheckOptions& opts) {
  GradCheckReport report;

  params.zero_grad();
  Tensor<T> loss = f(params);
  backward(loss);

  // Snapshot analytic gradients before FD evaluations disturb anything.
  std::map<std::string, std::vector<T>> analytic;
  for (auto& [name, t] : params) {
    t.raw()->ensure_grad();
    analytic[name] = t.grad();
  }

  Rng rng(opts.seed);
  const T eps = static_cast<T>(opts.eps);
  for (auto& [name, t] : params) {
    const Index n = t.numel();
    std::vector<Index> idx;
    if (n <= opts.samples_per_tensor) {
      idx.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    } else {
      // Sample without replacement via partial Fisher-Yates.
      std::vector<Index> all(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      for (Index i = 0; i < opts.samples_per_tensor; ++i) {
        const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
      }
      idx.assign(all.begin(), all.begin() + opts.samples_per_tensor);
    }

    const std::vector<T>& ga = analytic[name];
    for (Index e : idx) {
      const T saved = t.value()[static_cast<std::size_t>(e)];
      t.value()[static_cast<std::size_t>(e)] = saved + eps;
      const double fp = static_cast<double>(f(params).item());
      t.value()[static_cast<std::size_t>(e)] = saved - eps;
      const double fm = static_cast<double>(f(params).item());
      t.value()[static_cast<std::size_t>(e)] = saved;

      const double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
      const double a = static_cast<double>(ga[static_cast<std::size_t>(e)]);
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double rel = std::abs(a - numeric) / denom;
      ++report.elements_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_element = e;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

template GradCheckReport grad_check(const std::function<Tensor<float>(ParamSet<float>&)>&,
                                    ParamSet<float>&, const GradCheckOptions&);
template GradCheckReport grad_check(const std::function<Tensor<double>(ParamSet<double>&)>&,
                                    ParamSet<double>&, const GradCheckOptions&);

}  // namespace tap
