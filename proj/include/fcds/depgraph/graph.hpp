#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "fcds/constituency/attention.hpp"
#include "fcds/constituency/tree_lstm.hpp"
#include "fcds/corpus/types.hpp"
#include "fcds/encoder/encoder.hpp"
#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"

namespace fcds::depgraph {

using num::Tensor;

enum class NodeKind { Token, RootToken, Mention, Document };
enum class EdgeKind { Dependency, AdjacentRoot, RootDocument, LongRangeRoot, MentionToken };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Token: return "token";
    case NodeKind::RootToken: return "root_token";
    case NodeKind::Mention: return "mention";
    case NodeKind::Document: return "document";
  }
  return "?";
}

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Dependency: return "dependency";
    case EdgeKind::AdjacentRoot: return "adjacent_root";
    case EdgeKind::RootDocument: return "root_document";
    case EdgeKind::LongRangeRoot: return "long_range_root";
    case EdgeKind::MentionToken: return "mention_token";
  }
  return "?";
}

struct GraphNode {
  NodeKind kind = NodeKind::Token;
  std::size_t sentence = 0;
  std::size_t token = 0;    // global index, token and root nodes
  std::size_t entity = 0;   // entity position, mention nodes
  std::size_t mention = 0;  // mention index within the entity
};

// Long-range root edges are the only directed ones: from the earlier
// sentence root to the later one.
struct Edge {
  std::size_t from = 0, to = 0;
  EdgeKind kind = EdgeKind::Dependency;
  bool directed() const { return kind == EdgeKind::LongRangeRoot; }
};

// Pair-independent structure of the syntax graph. Node order: one node per
// token (global order), then mention nodes (entity order, then mention
// order), then the document node.
struct GraphSkeleton {
  std::vector<GraphNode> nodes;
  std::vector<Edge> edges;
  std::vector<std::size_t> root_nodes;  // per sentence
  std::optional<std::size_t> document_node;
  std::vector<std::vector<std::size_t>> entity_mention_nodes;
  std::vector<std::vector<std::size_t>> neighbors;  // undirected hop view, ascending
  std::size_t token_count = 0;

  std::size_t size() const { return nodes.size(); }
};

// `with_document_node = false` gives the ablated graph used for distance
// statistics: no document node, no root-document edges and no long-range
// root edges.
inline GraphSkeleton build_skeleton(const corpus::AnnotatedDocument& doc, bool with_document_node = true) {
  GraphSkeleton g;
  const auto n_tok = doc.token_count();
  g.token_count = n_tok;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s)
    for (const auto& t : doc.sentences[s]) g.nodes.push_back({NodeKind::Token, s, t.global_index, 0, 0});

  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto off = doc.sentence_offset(s);
    const auto& p = doc.dependency_parses.at(s);
    std::optional<std::size_t> root;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p.heads[i] == 0) {
        if (!root) root = off + i;
        continue;
      }
      g.edges.push_back({off + p.heads[i] - 1, off + i, EdgeKind::Dependency});
    }
    const auto r = root.value_or(off);
    g.nodes[r].kind = NodeKind::RootToken;
    g.root_nodes.push_back(r);
  }

  g.entity_mention_nodes.resize(doc.entities.size());
  for (std::size_t e = 0; e < doc.entities.size(); ++e)
    for (std::size_t m = 0; m < doc.entities[e].mentions.size(); ++m) {
      const auto& men = doc.entities[e].mentions[m];
      const auto id = g.nodes.size();
      g.nodes.push_back({NodeKind::Mention, men.sentence_index, men.start, e, m});
      g.entity_mention_nodes[e].push_back(id);
      for (std::size_t t = men.start; t < men.end; ++t) g.edges.push_back({id, t, EdgeKind::MentionToken});
    }

  const auto I = g.root_nodes.size();
  for (std::size_t i = 0; i + 1 < I; ++i) g.edges.push_back({g.root_nodes[i], g.root_nodes[i + 1], EdgeKind::AdjacentRoot});
  if (with_document_node) {
    const auto dn = g.nodes.size();
    g.nodes.push_back({NodeKind::Document, 0, 0, 0, 0});
    g.document_node = dn;
    for (auto r : g.root_nodes) g.edges.push_back({r, dn, EdgeKind::RootDocument});
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = i + 2; j < I; ++j) g.edges.push_back({g.root_nodes[i], g.root_nodes[j], EdgeKind::LongRangeRoot});
  }

  g.neighbors.assign(g.nodes.size(), {});
  for (const auto& e : g.edges) {
    g.neighbors[e.from].push_back(e.to);
    g.neighbors[e.to].push_back(e.from);
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

// ADJ[i][j] is the weight of the edge i -> j: 1 both ways for bi-directed
// edges, cos(s_i, s_j) for long-range root edges.
inline Tensor build_adjacency(const GraphSkeleton& g, const constituency::SentenceBank& bank) {
  const auto n = g.size();
  std::vector<double> base(n * n, 0.0);
  std::vector<Tensor> weights;
  std::vector<std::size_t> positions;
  for (const auto& e : g.edges) {
    if (e.directed()) {
      const auto si = g.nodes[e.from].sentence, sj = g.nodes[e.to].sentence;
      weights.push_back(num::cosine(bank.sentence(si), bank.sentence(sj)));
      positions.push_back(e.from * n + e.to);
    } else {
      base[e.from * n + e.to] = 1.0;
      base[e.to * n + e.from] = 1.0;
    }
  }
  Tensor adj = Tensor::from({n, n}, std::move(base));
  if (!weights.empty()) adj = num::add(adj, num::scatter(num::concat(weights), {n, n}, positions));
  return adj;
}

struct SyntaxGraph {
  GraphSkeleton skeleton;
  Tensor adjacency;  // [n x n]
  Tensor features;   // [n x g]
};

struct GraphEncoderConfig {
  std::size_t fusion_hidden = 64;
  std::size_t width = 128;  // GCN width g
};

// Node features entering the GCN. Roots are fused with their own sentence
// vector by a one-hidden-layer network; every feature is then mapped to the
// common width g (separate adapters for token-space and sentence-space
// features).
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(num::ParameterStore& store, num::Rng& rng, std::size_t token_dim, std::size_t state_dim,
               const GraphEncoderConfig& cfg)
      : cfg_(cfg) {
    const auto in = token_dim + state_dim;
    fuse_w1_ = store.add("graph.fuse_w1", {in, cfg.fusion_hidden}, in, rng);
    fuse_b1_ = store.add("graph.fuse_b1", {cfg.fusion_hidden}, in, rng);
    fuse_w2_ = store.add("graph.fuse_w2", {cfg.fusion_hidden, token_dim}, cfg.fusion_hidden, rng);
    fuse_b2_ = store.add("graph.fuse_b2", {token_dim}, cfg.fusion_hidden, rng);
    tok_w_ = store.add("graph.token_in_w", {token_dim, cfg.width}, token_dim, rng);
    tok_b_ = store.add("graph.token_in_b", {cfg.width}, token_dim, rng);
    doc_w_ = store.add("graph.doc_in_w", {state_dim, cfg.width}, state_dim, rng);
    doc_b_ = store.add("graph.doc_in_b", {cfg.width}, state_dim, rng);
  }

  std::size_t width() const { return cfg_.width; }

  Tensor fuse_root(const Tensor& root_feature, const Tensor& sentence_vector) const {
    const Tensor hidden =
        num::tanh(num::add(num::matmul(num::concat({root_feature, sentence_vector}), fuse_w1_), fuse_b1_));
    return num::add(num::matmul(hidden, fuse_w2_), fuse_b2_);
  }

  // Rows for every token and mention node, [T + M x g].
  Tensor base_features(const GraphSkeleton& g, const encoder::EncodedDocument& enc,
                       const constituency::SentenceBank& bank, const corpus::AnnotatedDocument& doc) const {
    std::vector<Tensor> rows;
    rows.reserve(g.size());
    const Tensor tokens = num::gather(enc.H, enc.index_map);  // [T x d]
    for (std::size_t t = 0; t < g.token_count; ++t) {
      const auto& node = g.nodes[t];
      Tensor r = num::row(tokens, t);
      if (node.kind == NodeKind::RootToken) r = fuse_root(r, bank.sentence(node.sentence));
      rows.push_back(r);
    }
    for (std::size_t i = g.token_count; i < g.size(); ++i) {
      const auto& node = g.nodes[i];
      if (node.kind != NodeKind::Mention) continue;
      rows.push_back(encoder::mention_embedding(enc, doc.entities[node.entity].mentions[node.mention]));
    }
    return num::add(num::matmul(num::stack(rows), tok_w_), tok_b_);
  }

  // Attention-weighted average of the sentence vectors, mapped to width g.
  Tensor document_feature(const constituency::SentenceBank& bank, const Tensor& attention) const {
    return num::add(num::matmul(num::matmul(attention, bank.V), doc_w_), doc_b_);
  }

  Tensor node_features(const GraphSkeleton& g, const Tensor& base, const constituency::SentenceBank& bank,
                       const Tensor& attention) const {
    if (!g.document_node) return base;
    return num::concat({base, document_feature(bank, attention)}, 0);
  }

 private:
  GraphEncoderConfig cfg_;
  Tensor fuse_w1_, fuse_b1_, fuse_w2_, fuse_b2_, tok_w_, tok_b_, doc_w_, doc_b_;
};

inline SyntaxGraph build_graph(const corpus::AnnotatedDocument& doc, const encoder::EncodedDocument& enc,
                               const constituency::SentenceBank& bank, const constituency::PairAttention& attn,
                               const GraphEncoder& genc) {
  SyntaxGraph out;
  out.skeleton = build_skeleton(doc, true);
  out.adjacency = build_adjacency(out.skeleton, bank);
  out.features = genc.node_features(out.skeleton, genc.base_features(out.skeleton, enc, bank, doc), bank, attn.A);
  return out;
}

}  // namespace fcds::depgraph
