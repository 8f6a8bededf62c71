#pragma once

#include <cmath>
#include <vector>

#include "fcds/numerics/parameters.hpp"

namespace fcds::model {

inline std::size_t warmup_steps(std::size_t total_steps, double warmup_ratio) {
  return static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)));
}

// Linear warmup to lr_max over the first ceil(ratio * total) steps, then
// linear decay to 0 at `total_steps`. Steps are 1-based.
inline double scheduled_lr(std::size_t step, std::size_t total_steps, double warmup_ratio, double lr_max) {
  const auto w = warmup_steps(total_steps, warmup_ratio);
  if (step <= w) return w == 0 ? lr_max : lr_max * static_cast<double>(step) / static_cast<double>(w);
  if (step >= total_steps) return 0.0;
  return lr_max * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - w);
}

struct AdamWConfig {
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled weight decay. Parameters without a gradient are
// treated as having a zero gradient.
class AdamW {
 public:
  AdamW(num::ParameterStore& store, AdamWConfig cfg = {}) : store_(&store), cfg_(cfg) {
    for (const auto& p : store.all()) {
      m_.emplace_back(p.tensor.numel(), 0.0);
      v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }

  std::size_t steps_taken() const { return t_; }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto& params = store_->all();
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& t = params[k].tensor;
      auto theta = t.mutable_values();
      const bool has = t.has_grad();
      const auto g = t.grad();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = has ? g[i] : 0.0;
        theta[i] -= lr * cfg_.weight_decay * theta[i];
        m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * gi * gi;
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      }
    }
  }

 private:
  num::ParameterStore* store_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace fcds::model
