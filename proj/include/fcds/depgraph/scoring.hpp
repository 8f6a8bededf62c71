#pragma once

#include <vector>

#include "fcds/depgraph/path.hpp"
#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"

namespace fcds::depgraph {

// Coordinate-wise logsumexp over the entity's post-GCN mention rows.
inline Tensor entity_pool(const Tensor& features, const std::vector<std::size_t>& mention_nodes) {
  return num::logsumexp(num::gather(features, mention_nodes), 0);
}

// pair = LeakyRelu(W_p1 e_s + W_p2 e_o), slope 0.01, no bias.
class PairTransform {
 public:
  static constexpr double kSlope = 0.01;

  PairTransform() = default;
  PairTransform(num::ParameterStore& store, num::Rng& rng, std::size_t entity_dim, std::size_t out_dim) {
    w_p1_ = store.add("pair.w_p1", {entity_dim, out_dim}, 2 * entity_dim, rng);
    w_p2_ = store.add("pair.w_p2", {entity_dim, out_dim}, 2 * entity_dim, rng);
  }

  Tensor operator()(const Tensor& e_s, const Tensor& e_o) const {
    return num::leaky_relu(num::add(num::matmul(e_s, w_p1_), num::matmul(e_o, w_p2_)), kSlope);
  }

  Tensor& w_p1() { return w_p1_; }
  Tensor& w_p2() { return w_p2_; }

 private:
  Tensor w_p1_, w_p2_;
};

// I = [e_s; e_o; pair; flattened 14-row path]
inline Tensor pair_representation(const Tensor& e_s, const Tensor& e_o, const Tensor& pair, const Tensor& path_rows) {
  return num::concat({e_s, e_o, pair, num::flatten(path_rows)});
}

// z_dep = W_d2 sigmoid(W_d1 I + b_d1) + b_d2, one output per class plus NA.
class DependencyScorer {
 public:
  DependencyScorer() = default;
  DependencyScorer(num::ParameterStore& store, num::Rng& rng, std::size_t input_dim, std::size_t hidden,
                   std::size_t outputs) {
    w_d1_ = store.add("dep.w_d1", {input_dim, hidden}, input_dim, rng);
    b_d1_ = store.add("dep.b_d1", {hidden}, input_dim, rng);
    w_d2_ = store.add("dep.w_d2", {hidden, outputs}, hidden, rng);
    b_d2_ = store.add("dep.b_d2", {outputs}, hidden, rng);
  }

  Tensor operator()(const Tensor& representation) const {
    return num::add(num::matmul(num::sigmoid(num::add(num::matmul(representation, w_d1_), b_d1_)), w_d2_), b_d2_);
  }

  const Tensor& bias() const { return b_d2_; }

 private:
  Tensor w_d1_, b_d1_, w_d2_, b_d2_;
};

}  // namespace fcds::depgraph
