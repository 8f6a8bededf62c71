#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fcds/constituency/tree_lstm.hpp"
#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"

namespace fcds::constituency {

struct PairAttention {
  Tensor S;  // [k] attended sentence vector
  Tensor A;  // [I] head-averaged attention weights
};

// Multi-head scaled dot-product attention over sentence vectors, queried
// by the difference of the two entity vectors.
class SentenceAttention {
 public:
  SentenceAttention() = default;
  SentenceAttention(num::ParameterStore& store, num::Rng& rng, std::size_t entity_dim, std::size_t state_dim,
                    std::size_t heads)
      : k_(state_dim), heads_(heads) {
    if (heads == 0 || state_dim % heads != 0)
      throw std::invalid_argument("attention_heads must divide tree_state_dim");
    w_query_ = store.add("attn.w_query", {entity_dim, state_dim}, entity_dim, rng);
    w_key_ = store.add("attn.w_key", {state_dim, state_dim}, state_dim, rng);
    w_value_ = store.add("attn.w_value", {state_dim, state_dim}, state_dim, rng);
    w_out_ = store.add("attn.w_out", {state_dim, state_dim}, state_dim, rng);
  }

  std::size_t heads() const { return heads_; }

  PairAttention attend(const Tensor& e_s, const Tensor& e_o, const SentenceBank& bank) const {
    const Tensor q = num::matmul(num::sub(e_s, e_o), w_query_);
    const Tensor K = num::matmul(bank.V, w_key_);
    const Tensor V = num::matmul(bank.V, w_value_);
    const std::size_t dh = k_ / heads_;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> outs;
    Tensor weight_sum;
    for (std::size_t hd = 0; hd < heads_; ++hd) {
      const auto lo = hd * dh, hi = lo + dh;
      const Tensor logits = num::scale(num::matmul(num::slice(K, 1, lo, hi), num::slice(q, 0, lo, hi)), inv_sqrt);
      const Tensor a = num::softmax(logits, 0);
      outs.push_back(num::matmul(a, num::slice(V, 1, lo, hi)));
      weight_sum = weight_sum.defined() ? num::add(weight_sum, a) : a;
    }
    PairAttention out;
    out.S = num::matmul(num::concat(outs), w_out_);
    out.A = num::scale(weight_sum, 1.0 / static_cast<double>(heads_));
    return out;
  }

 private:
  std::size_t k_ = 0, heads_ = 1;
  Tensor w_query_, w_key_, w_value_, w_out_;
};

// z_s = tanh(W_s1 e_s + W_s2 S), z_o likewise, z[r] = z_s^T W_r z_o + b_r
// for every relation class and the NA column.
class ConstituencyScorer {
 public:
  ConstituencyScorer() = default;
  ConstituencyScorer(num::ParameterStore& store, num::Rng& rng, std::size_t entity_dim, std::size_t state_dim,
                     std::size_t hidden, std::size_t outputs)
      : hidden_(hidden), outputs_(outputs) {
    w_s1_ = store.add("const.w_s1", {entity_dim, hidden}, entity_dim + state_dim, rng);
    w_s2_ = store.add("const.w_s2", {state_dim, hidden}, entity_dim + state_dim, rng);
    w_o1_ = store.add("const.w_o1", {entity_dim, hidden}, entity_dim + state_dim, rng);
    w_o2_ = store.add("const.w_o2", {state_dim, hidden}, entity_dim + state_dim, rng);
    // W_r[p][q] lives at column q * outputs + r
    w_bilinear_ = store.add("const.w_bilinear", {hidden, hidden * outputs}, hidden, rng);
    bias_ = store.add("const.bias", {outputs}, hidden, rng);
  }

  Tensor score(const Tensor& e_s, const Tensor& e_o, const Tensor& S) const {
    const Tensor z_s = num::tanh(num::add(num::matmul(e_s, w_s1_), num::matmul(S, w_s2_)));
    const Tensor z_o = num::tanh(num::add(num::matmul(e_o, w_o1_), num::matmul(S, w_o2_)));
    const Tensor left = num::reshape(num::matmul(z_s, w_bilinear_), {hidden_, outputs_});
    return num::add(num::matmul(z_o, left), bias_);
  }

  const Tensor& bilinear() const { return w_bilinear_; }
  double bilinear_entry(std::size_t r, std::size_t p, std::size_t q) const {
    return w_bilinear_.at(p, q * outputs_ + r);
  }
  const Tensor& bias() const { return bias_; }
  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t hidden_ = 0, outputs_ = 0;
  Tensor w_s1_, w_s2_, w_o1_, w_o2_, w_bilinear_, bias_;
};

}  // namespace fcds::constituency
