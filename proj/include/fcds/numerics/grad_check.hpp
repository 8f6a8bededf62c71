#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fcds/numerics/tensor.hpp"

namespace fcds::num {

// Largest coordinate-wise relative error between the tape gradient and a
// central finite difference:
//   |a - n| / (|a| + |n| + 1e-12),  n = (f(x + h e_i) - f(x - h e_i)) / 2h.
// `f` rebuilds its graph on every call and must read the current values of
// `wrt`. Existing gradients on `wrt` are cleared.
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> wrt, double h = 1e-5) {
  for (auto& t : wrt) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  backward(f());
  double worst = 0.0;
  for (auto& t : wrt) {
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    auto vals = t.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double up = f().item();
      vals[i] = saved - h;
      const double down = f().item();
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + std::abs(numeric) + 1e-12);
      worst = std::max(worst, err);
    }
    t.zero_grad();
  }
  return worst;
}

// Single-input form: f maps x to a scalar.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double h = 1e-5) {
  return grad_check([&f, x] { return f(x); }, std::vector<Tensor>{x}, h);
}

}  // namespace fcds::num
