#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "camta/tensor.hpp"

namespace camta {

// A deterministic scalar function of a parameter list. When `grads` is
// non-null the function must also fill one gradient tensor per parameter.
using ScalarFn =
    std::function<double(const std::vector<Tensor>&, std::vector<Tensor>*)>;

// Max over all parameter entries of
//   |analytic - central difference| / max(1, |analytic|, |numeric|).
inline double grad_check(const ScalarFn& f, std::vector<Tensor> params,
                         double step) {
  if (step < 1e-7 || step > 1e-4)
    throw std::invalid_argument("grad_check: step outside [1e-7, 1e-4]");
  std::vector<Tensor> analytic;
  const double base = f(params, &analytic);
  if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");
  if (analytic.size() != params.size())
    throw std::logic_error("grad_check: gradient count mismatch");

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Index i = 0; i < params[p].numel(); ++i) {
      const double saved = params[p].data[i];
      params[p].data[i] = saved + step;
      const double up = f(params, nullptr);
      params[p].data[i] = saved - step;
      const double down = f(params, nullptr);
      params[p].data[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("grad_check: non-finite loss under perturbation");
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p].data[i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace camta
