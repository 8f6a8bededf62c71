#pragma once

#include <string>
#include <vector>

#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"

namespace fcds::depgraph {

using num::Tensor;

// A_hat = D^-1 (ADJ^T + I) with D the absolute row sums. The transpose
// makes node j aggregate over its incoming edges i -> j; absolute sums keep
// the normalizer positive when cosine weights are negative.
inline Tensor normalized_adjacency(const Tensor& adj) {
  const auto n = adj.rows();
  std::vector<double> eye(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  return num::row_normalize_abs(num::add(num::transpose(adj), Tensor::from({n, n}, std::move(eye))));
}

// q^{l+1} = act(A_hat q^l W_l); tanh between layers, identity after the last.
class Gcn {
 public:
  Gcn() = default;
  Gcn(num::ParameterStore& store, num::Rng& rng, std::size_t width, std::size_t layers) {
    for (std::size_t l = 0; l < layers; ++l)
      weights_.push_back(store.add("gcn." + std::to_string(l) + ".w", {width, width}, width, rng));
  }

  std::size_t layers() const { return weights_.size(); }

  Tensor forward(const Tensor& a_hat, const Tensor& features) const {
    Tensor q = features;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      q = num::matmul(a_hat, num::matmul(q, weights_[l]));
      if (l + 1 < weights_.size()) q = num::tanh(q);
    }
    return q;
  }

 private:
  std::vector<Tensor> weights_;
};

}  // namespace fcds::depgraph
