#pragma once

#include <functional>
#include <vector>

#include "fcds/corpus/types.hpp"
#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"

namespace fcds::constituency {

using num::Tensor;

// Per-node states of one tree, in post-order (children before parents; the
// root is last). Gate activations are kept for inspection.
struct TreeStates {
  std::vector<const corpus::ConstituencyNode*> nodes;
  std::vector<Tensor> h, c;
  std::vector<Tensor> input_gate, output_gate;
  std::vector<std::vector<Tensor>> forget_gates;  // one per child

  const Tensor& root_h() const { return h.back(); }
  const Tensor& root_c() const { return c.back(); }
};

// Child-sum Tree-LSTM. Leaves take their token's encoder row as input,
// inner nodes take a zero input; h and c start at zero.
//
//   i = sigma(W_i x + U_i sum_l h_l + b_i)      o, u likewise (u with tanh)
//   f_l = sigma(W_f x + U_f h_l + b_f)          one forget gate per child
//   c = i * u + sum_l f_l * c_l,   h = o * tanh(c)
class TreeLstm {
 public:
  using LeafInput = std::function<Tensor(std::size_t token)>;

  TreeLstm() = default;
  TreeLstm(num::ParameterStore& store, num::Rng& rng, std::size_t input_dim, std::size_t state_dim)
      : k_(state_dim) {
    wx_ = store.add("tree.wx", {input_dim, 4 * state_dim}, input_dim, rng);
    u_iou_ = store.add("tree.u_iou", {state_dim, 3 * state_dim}, state_dim, rng);
    u_f_ = store.add("tree.u_f", {state_dim, state_dim}, state_dim, rng);
    b_iou_ = store.add("tree.b_iou", {3 * state_dim}, state_dim, rng);
    b_f_ = store.add("tree.b_f", {state_dim}, state_dim, rng);
  }

  std::size_t state_dim() const { return k_; }

  TreeStates forward(const corpus::ConstituencyNode& tree, const LeafInput& leaf_input) const {
    TreeStates st;
    visit(tree, leaf_input, st);
    return st;
  }

 private:
  std::size_t visit(const corpus::ConstituencyNode& n, const LeafInput& leaf_input, TreeStates& st) const {
    std::vector<std::size_t> kids;
    for (const auto& c : n.children) kids.push_back(visit(c, leaf_input, st));

    Tensor xw;
    if (n.is_leaf()) xw = num::matmul(leaf_input(n.leaf_token.value()), wx_);

    Tensor iou = b_iou_;
    if (xw.defined()) iou = num::add(iou, num::slice(xw, 0, 0, 3 * k_));
    if (!kids.empty()) {
      Tensor hsum = st.h[kids[0]];
      for (std::size_t j = 1; j < kids.size(); ++j) hsum = num::add(hsum, st.h[kids[j]]);
      iou = num::add(iou, num::matmul(hsum, u_iou_));
    }
    const Tensor i = num::sigmoid(num::slice(iou, 0, 0, k_));
    const Tensor o = num::sigmoid(num::slice(iou, 0, k_, 2 * k_));
    const Tensor u = num::tanh(num::slice(iou, 0, 2 * k_, 3 * k_));

    Tensor fx = b_f_;
    if (xw.defined()) fx = num::add(fx, num::slice(xw, 0, 3 * k_, 4 * k_));
    Tensor c = num::mul(i, u);
    std::vector<Tensor> forgets;
    for (auto kid : kids) {
      Tensor f = num::sigmoid(num::add(fx, num::matmul(st.h[kid], u_f_)));
      c = num::add(c, num::mul(f, st.c[kid]));
      forgets.push_back(f);
    }
    st.nodes.push_back(&n);
    st.h.push_back(num::mul(o, num::tanh(c)));
    st.c.push_back(c);
    st.input_gate.push_back(i);
    st.output_gate.push_back(o);
    st.forget_gates.push_back(std::move(forgets));
    return st.h.size() - 1;
  }

  std::size_t k_ = 0;
  Tensor wx_, u_iou_, u_f_, b_iou_, b_f_;
};

// V_doc: row i is the root hidden state of sentence i.
struct SentenceBank {
  Tensor V;  // [I x k]
  std::size_t sentences() const { return V.rows(); }
  Tensor sentence(std::size_t i) const { return num::row(V, i); }
};

inline SentenceBank sentence_vectors(const std::vector<TreeStates>& trees) {
  std::vector<Tensor> roots;
  for (const auto& t : trees) roots.push_back(t.root_h());
  return {num::stack(roots)};
}

}  // namespace fcds::constituency
