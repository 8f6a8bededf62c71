#pragma once

#include <string>
#include <vector>

#include "fcds/corpus/types.hpp"
#include "fcds/encoder/vocabulary.hpp"
#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"

namespace fcds::encoder {

using num::Tensor;

// Document tokens with a marker before and after every mention.
struct AugmentedSequence {
  std::vector<std::string> tokens;
  std::vector<bool> is_marker;
  std::vector<std::size_t> index_map;  // original global index -> augmented index
};

// At each token boundary, closing markers precede opening markers, so
// adjacent mentions [0,1) and [1,2) give "* a * * b *".
inline AugmentedSequence insert_markers(const corpus::AnnotatedDocument& doc) {
  const auto n = doc.token_count();
  std::vector<std::size_t> opens(n + 1, 0), closes(n + 1, 0);
  for (const auto& e : doc.entities)
    for (const auto& m : e.mentions) {
      if (m.start < m.end && m.end <= n) {
        ++opens[m.start];
        ++closes[m.end];
      }
    }
  AugmentedSequence seq;
  auto marker = [&seq] {
    seq.tokens.emplace_back(Vocabulary::kMarkerSymbol);
    seq.is_marker.push_back(true);
  };
  const auto toks = doc.tokens();
  for (std::size_t g = 0; g <= n; ++g) {
    for (std::size_t k = 0; k < closes[g]; ++k) marker();
    if (g == n) break;
    for (std::size_t k = 0; k < opens[g]; ++k) marker();
    seq.index_map.push_back(seq.tokens.size());
    seq.tokens.push_back(toks[g]->surface);
    seq.is_marker.push_back(false);
  }
  return seq;
}

struct EncodedDocument {
  Tensor H;  // [T x d]
  std::vector<std::size_t> index_map;
  std::size_t length = 0;  // T
  std::size_t dim = 0;     // d

  Tensor token_row(std::size_t global_index) const { return num::row(H, index_map.at(global_index)); }
};

struct EncoderConfig {
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 32;  // per direction, d = 2 * hidden_dim
};

// Embedding table followed by a single-layer bidirectional LSTM.
class Encoder {
 public:
  Encoder() = default;
  Encoder(num::ParameterStore& store, num::Rng& rng, const EncoderConfig& cfg, std::size_t vocab_size) : cfg_(cfg) {
    const auto e = cfg.embedding_dim, h = cfg.hidden_dim;
    embedding_ = store.add("encoder.embedding", {vocab_size, e}, e, rng);
    for (int dir = 0; dir < 2; ++dir) {
      const std::string p = dir == 0 ? "encoder.fwd." : "encoder.bwd.";
      wx_[dir] = store.add(p + "wx", {e, 4 * h}, e, rng);
      wh_[dir] = store.add(p + "wh", {h, 4 * h}, h, rng);
      b_[dir] = store.add(p + "b", {4 * h}, h, rng);
    }
  }

  std::size_t output_dim() const { return 2 * cfg_.hidden_dim; }
  const Tensor& embedding() const { return embedding_; }

  EncodedDocument encode(const corpus::AnnotatedDocument& doc, const Vocabulary& vocab) const {
    const auto seq = insert_markers(doc);
    std::vector<std::size_t> ids;
    ids.reserve(seq.tokens.size());
    for (std::size_t i = 0; i < seq.tokens.size(); ++i)
      ids.push_back(seq.is_marker[i] ? Vocabulary::kMarker : vocab.id(seq.tokens[i]));
    return encode_ids(ids, seq.index_map);
  }

  EncodedDocument encode_ids(const std::vector<std::size_t>& ids, std::vector<std::size_t> index_map) const {
    const auto T = ids.size();
    const Tensor X = num::gather(embedding_, ids);  // [T x e]
    std::vector<Tensor> fwd = run(X, 0, false), bwd = run(X, 1, true);
    EncodedDocument out;
    out.H = num::concat({num::stack(fwd), num::stack(bwd)}, 1);
    out.index_map = std::move(index_map);
    out.length = T;
    out.dim = output_dim();
    return out;
  }

 private:
  // Hidden states in sequence order.
  std::vector<Tensor> run(const Tensor& X, int dir, bool reverse) const {
    const auto T = X.rows(), h = cfg_.hidden_dim;
    const Tensor XW = num::matmul(X, wx_[dir]);  // [T x 4h]
    std::vector<Tensor> hs(T);
    Tensor hprev, cprev;
    for (std::size_t step = 0; step < T; ++step) {
      const std::size_t t = reverse ? T - 1 - step : step;
      Tensor g = num::add(num::row(XW, t), b_[dir]);
      if (hprev.defined()) g = num::add(g, num::matmul(hprev, wh_[dir]));
      const Tensor i = num::sigmoid(num::slice(g, 0, 0, h));
      const Tensor f = num::sigmoid(num::slice(g, 0, h, 2 * h));
      const Tensor o = num::sigmoid(num::slice(g, 0, 2 * h, 3 * h));
      const Tensor u = num::tanh(num::slice(g, 0, 3 * h, 4 * h));
      Tensor c = num::mul(i, u);
      if (cprev.defined()) c = num::add(c, num::mul(f, cprev));
      hprev = num::mul(o, num::tanh(c));
      cprev = c;
      hs[t] = hprev;
    }
    return hs;
  }

  EncoderConfig cfg_;
  Tensor embedding_;
  Tensor wx_[2], wh_[2], b_[2];
};

// Mean of the mention's token rows; marker rows are never included.
inline Tensor mention_embedding(const EncodedDocument& enc, const corpus::Mention& m) {
  std::vector<std::size_t> rows;
  for (std::size_t g = m.start; g < m.end; ++g) rows.push_back(enc.index_map.at(g));
  return num::mean(num::gather(enc.H, rows), 0);
}

// Encoder-level entity vector: logsumexp over mention embeddings.
inline Tensor entity_embedding(const EncodedDocument& enc, const corpus::Entity& e) {
  std::vector<Tensor> rows;
  for (const auto& m : e.mentions) rows.push_back(mention_embedding(enc, m));
  return num::logsumexp(num::stack(rows), 0);
}

}  // namespace fcds::encoder
