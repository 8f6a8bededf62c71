#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fcds/encoder/vocabulary.hpp"
#include "fcds/model/config.hpp"
#include "fcds/model/loss.hpp"
#include "fcds/model/model.hpp"
#include "fcds/model/train.hpp"
#include "fcds/numerics/grad_check.hpp"
#include "fcds/synth/generator.hpp"

namespace fcds::model {

struct GradCheckResult {
  std::string component;
  double max_rel_error = 0;
  std::size_t scalars = 0;  // coordinates checked
};

// Reduces any output to a scalar through fixed random weights, so every
// output coordinate contributes to the checked gradient. Weights are drawn
// on first use and replayed on later calls in the same order.
class Projector {
 public:
  explicit Projector(std::uint64_t seed) : rng_(seed) {}

  void rewind() { next_ = 0; }

  Tensor operator()(const Tensor& y) {
    if (next_ == weights_.size()) {
      std::vector<double> w(y.numel());
      for (auto& v : w) v = rng_.uniform(-1.0, 1.0);
      weights_.push_back(Tensor::from(y.shape(), std::move(w)));
    }
    return num::sum(num::mul(y, weights_[next_++]));
  }

 private:
  num::Rng rng_;
  std::vector<Tensor> weights_;
  std::size_t next_ = 0;
};

namespace detail {

inline Tensor random_leaf(num::Rng& rng, num::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(num::detail::checked_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), true);
}

inline std::size_t scalars(const std::vector<Tensor>& ts) {
  std::size_t n = 0;
  for (const auto& t : ts) n += t.numel();
  return n;
}

inline std::vector<Tensor> join(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

// Central-difference step. At 1e-5 the rounding noise of a whole-document
// loss (about 1e-16 * |loss| / h) swamps attention-key gradients near 1e-7.
inline constexpr double kGradSuiteStep = 1e-4;

// Finite-difference checks for every component of the model, at the given
// (small) dimensions. Each check draws its own inputs from `seed`.
inline std::vector<GradCheckResult> run_grad_suite(std::uint64_t seed, const ModelConfig& dims, double margin = 1.0) {
  std::vector<GradCheckResult> out;
  num::Rng rng(seed);
  synth::RandomDocumentOptions opt;
  opt.min_sentences = opt.max_sentences = 3;
  opt.min_length = 2;
  opt.max_length = 4;
  opt.min_entities = opt.max_entities = 3;
  opt.max_mentions = 2;
  opt.num_classes = 2;
  auto doc = synth::random_document(rng, opt, "gradcheck");
  const auto vocab = encoder::Vocabulary::build({doc});
  const std::size_t C = opt.num_classes;
  FcdsModel model(dims, C, vocab.size(), seed);
  const auto& store = model.parameters();
  // Default initialization at these widths leaves some gradients near
  // 1e-10, below finite-difference resolution; redraw on [-1, 1].
  for (auto& p : model.parameters().all())
    if (p.name != "fusion.eta")
      for (auto& v : p.tensor.mutable_values()) v = rng.uniform(-1.0, 1.0);
  Projector project(seed + 1);
  std::uint64_t check_index = 0;

  auto check = [&](const std::string& name, const std::function<Tensor()>& f, const std::vector<Tensor>& wrt) {
    project = Projector(seed + ++check_index);
    auto g = [&] {
      project.rewind();
      return f();
    };
    out.push_back({name, num::grad_check(g, wrt, kGradSuiteStep), detail::scalars(wrt)});
  };

  const auto d = model.encoder().output_dim(), k = dims.tree_state_dim;

  check("encoder", [&] { return project(model.encoder().encode(doc, vocab).H); }, store.tensors_with_prefix("encoder."));

  {
    const auto& tree = doc.constituency_trees.at(0);
    std::vector<Tensor> leaves;
    for (std::size_t i = 0; i < doc.sentences[0].size(); ++i) leaves.push_back(detail::random_leaf(rng, {d}));
    check(
        "tree_lstm",
        [&] {
          const auto st = model.tree_lstm().forward(tree, [&](std::size_t g) { return leaves.at(g); });
          Tensor total = Tensor::scalar(0.0);
          for (std::size_t i = 0; i < st.h.size(); ++i) total = num::add(total, num::add(project(st.h[i]), project(st.c[i])));
          return total;
        },
        detail::join(store.tensors_with_prefix("tree."), leaves));
  }

  {
    const Tensor es = detail::random_leaf(rng, {d}), eo = detail::random_leaf(rng, {d});
    const Tensor V = detail::random_leaf(rng, {3, k});
    check(
        "attention",
        [&] {
          const auto a = model.attention().attend(es, eo, constituency::SentenceBank{V});
          return num::add(project(a.S), project(a.A));
        },
        detail::join(store.tensors_with_prefix("attn."), {es, eo, V}));
  }

  {
    const Tensor es = detail::random_leaf(rng, {d}), eo = detail::random_leaf(rng, {d}), S = detail::random_leaf(rng, {k});
    check("const_score", [&] { return project(model.const_scorer().score(es, eo, S)); },
          detail::join(store.tensors_with_prefix("const."), {es, eo, S}));
  }

  {
    auto ctx = model.prepare(doc, vocab);
    const Tensor H = ctx.enc.H.detach().set_requires_grad(true);
    const Tensor V = ctx.bank.V.detach().set_requires_grad(true);
    const Tensor A = detail::random_leaf(rng, {ctx.bank.sentences()}, 0.1, 1.0);
    ctx.enc.H = H;
    ctx.bank.V = V;
    std::vector<Tensor> wrt{H, V, A};
    for (const char* p : {"graph.", "gcn.", "pair.", "dep."}) wrt = detail::join(wrt, store.tensors_with_prefix(p));
    check(
        "graph_to_dep_score",
        [&] {
          model.build_graph_inputs(ctx);
          Tensor total = Tensor::scalar(0.0);
          for (std::size_t s = 0; s < doc.entities.size(); ++s)
            for (std::size_t o = 0; o < doc.entities.size(); ++o)
              if (s != o) total = num::add(total, project(model.dep_scores(ctx, s, o, A)));
          return total;
        },
        wrt);
  }

  {
    const Tensor zd = detail::random_leaf(rng, {C + 1}), zc = detail::random_leaf(rng, {C + 1});
    const Tensor eta = Tensor::scalar(0.7, true);
    check("fuse", [&] { return project(fuse(zd, zc, eta)); }, {zd, zc, eta});
  }

  {
    // Scores are drawn so that no margin term sits near its kink.
    const std::size_t classes = 5;
    std::set<std::size_t> gold;
    for (std::size_t i = 0; i < classes; ++i)
      if (rng.coin()) gold.insert(i);
    std::vector<double> z(classes + 1);
    z[classes] = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < classes; ++i) {
      const double c = gold.count(i) ? 1.0 : -1.0;
      do z[i] = rng.uniform(-3, 3);
      while (std::abs(margin - c * (z[i] - z[classes])) < 0.1);
    }
    const Tensor zt = Tensor::vector(z, true);
    check("margin_loss", [&] { return margin_loss(zt, gold, margin); }, {zt});
  }

  check("end_to_end", [&] { return document_loss(model, model.prepare(doc, vocab), margin); }, store.tensors());
  return out;
}

}  // namespace fcds::model
