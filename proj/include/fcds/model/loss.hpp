#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcds/numerics/tensor.hpp"

namespace fcds::model {

using num::Tensor;

// z_final = z_dep + eta * z_const
inline Tensor fuse(const Tensor& z_dep, const Tensor& z_const, const Tensor& eta) {
  if (z_dep.shape() != z_const.shape())
    throw num::ShapeError("fuse: width mismatch " + std::to_string(z_dep.numel()) + " vs " +
                          std::to_string(z_const.numel()));
  if (eta.numel() != 1) throw num::ShapeError("fuse: eta must be a scalar");
  return num::add(z_dep, num::mul(z_const, eta));
}

// sum over i < C of max(0, alpha - c_i (z[i] - z[NA])), c_i = +1 for gold
// classes and -1 otherwise. The NA score is the last coordinate.
inline Tensor margin_loss(const Tensor& z_final, const std::set<std::size_t>& gold, double alpha) {
  const auto width = z_final.numel();
  if (z_final.rank() != 1 || width < 2) throw num::ShapeError("margin_loss: expected a [C+1] score vector");
  const auto C = width - 1;
  std::vector<double> sign(C, -1.0);
  for (auto g : gold) {
    if (g >= C) throw std::out_of_range("margin_loss: gold class " + std::to_string(g) + " out of range");
    sign[g] = 1.0;
  }
  const Tensor diff = num::sub(num::slice(z_final, 0, 0, C), num::slice(z_final, 0, C, width));
  const Tensor slack = num::sub(Tensor::filled({C}, alpha), num::mul(Tensor::vector(std::move(sign)), diff));
  return num::sum(num::relu(slack));
}

// Classes scoring strictly above NA; empty means NA.
inline std::set<std::size_t> predict(const Tensor& z_final) {
  const auto& z = z_final.values();
  const auto C = z.size() - 1;
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < C; ++i)
    if (z[i] > z[C]) out.insert(i);
  return out;
}

}  // namespace fcds::model
