#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fcds/constituency/attention.hpp"
#include "fcds/constituency/tree_lstm.hpp"
#include "fcds/corpus/types.hpp"
#include "fcds/depgraph/gcn.hpp"
#include "fcds/depgraph/graph.hpp"
#include "fcds/depgraph/path.hpp"
#include "fcds/depgraph/scoring.hpp"
#include "fcds/encoder/encoder.hpp"
#include "fcds/encoder/vocabulary.hpp"
#include "fcds/model/config.hpp"
#include "fcds/model/loss.hpp"
#include "fcds/numerics/parameters.hpp"

namespace fcds::model {

// Everything about one document that does not depend on the entity pair.
struct DocumentContext {
  const corpus::AnnotatedDocument* doc = nullptr;
  encoder::EncodedDocument enc;
  std::vector<constituency::TreeStates> trees;
  constituency::SentenceBank bank;
  std::vector<Tensor> entities;  // encoder-level entity vectors
  depgraph::GraphSkeleton skeleton;
  Tensor adjacency;
  Tensor a_hat;
  Tensor base;             // token and mention rows entering the GCN
  Tensor shared_features;  // post-GCN rows, shared-graph mode only
};

struct RelationScores {
  Tensor z_const, z_dep, z_final;
  constituency::PairAttention attention;
  depgraph::NodePath path;
};

class FcdsModel {
 public:
  FcdsModel(const ModelConfig& cfg, std::size_t num_classes, std::size_t vocab_size, std::uint64_t seed)
      : cfg_(cfg), num_classes_(num_classes) {
    num::Rng rng(seed);
    const auto outputs = num_classes + 1;
    encoder_ = encoder::Encoder(store_, rng, {cfg.embedding_dim, cfg.hidden_dim}, vocab_size);
    const auto d = encoder_.output_dim(), k = cfg.tree_state_dim, g = cfg.gcn_dim;
    tree_ = constituency::TreeLstm(store_, rng, d, k);
    attention_ = constituency::SentenceAttention(store_, rng, d, k, cfg.attention_heads);
    const_scorer_ = constituency::ConstituencyScorer(store_, rng, d, k, cfg.const_hidden, outputs);
    graph_encoder_ = depgraph::GraphEncoder(store_, rng, d, k, {cfg.root_fusion_hidden, g});
    gcn_ = depgraph::Gcn(store_, rng, g, cfg.gcn_layers);
    pair_ = depgraph::PairTransform(store_, rng, g, cfg.pair_dim);
    dep_scorer_ = depgraph::DependencyScorer(store_, rng, (2 + depgraph::kPathRows) * g + cfg.pair_dim,
                                             cfg.score_hidden, outputs);
    eta_ = store_.add("fusion.eta", Tensor::scalar(1.0));
  }

  FcdsModel(const FcdsModel&) = delete;
  FcdsModel& operator=(const FcdsModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  std::size_t num_classes() const { return num_classes_; }
  num::ParameterStore& parameters() { return store_; }
  const num::ParameterStore& parameters() const { return store_; }
  const Tensor& eta() const { return eta_; }

  const encoder::Encoder& encoder() const { return encoder_; }
  const constituency::TreeLstm& tree_lstm() const { return tree_; }
  const constituency::SentenceAttention& attention() const { return attention_; }
  const constituency::ConstituencyScorer& const_scorer() const { return const_scorer_; }
  const depgraph::GraphEncoder& graph_encoder() const { return graph_encoder_; }
  const depgraph::Gcn& gcn() const { return gcn_; }

  DocumentContext prepare(const corpus::AnnotatedDocument& doc, const encoder::Vocabulary& vocab) const {
    DocumentContext ctx;
    ctx.doc = &doc;
    ctx.enc = encoder_.encode(doc, vocab);
    const auto& enc = ctx.enc;
    for (const auto& t : doc.constituency_trees)
      ctx.trees.push_back(tree_.forward(t, [&enc](std::size_t g) { return enc.token_row(g); }));
    ctx.bank = constituency::sentence_vectors(ctx.trees);
    for (const auto& e : doc.entities) ctx.entities.push_back(encoder::entity_embedding(ctx.enc, e));
    ctx.skeleton = depgraph::build_skeleton(doc, true);
    build_graph_inputs(ctx);
    return ctx;
  }

  // Adjacency, normalized adjacency and base node rows from the encoding
  // and sentence bank already in `ctx`.
  void build_graph_inputs(DocumentContext& ctx) const {
    ctx.adjacency = depgraph::build_adjacency(ctx.skeleton, ctx.bank);
    ctx.a_hat = depgraph::normalized_adjacency(ctx.adjacency);
    ctx.base = graph_encoder_.base_features(ctx.skeleton, ctx.enc, ctx.bank, *ctx.doc);
    ctx.shared_features = Tensor();
    if (cfg_.shared_graph) {
      const auto I = ctx.bank.sentences();
      const Tensor uniform = Tensor::filled({I}, 1.0 / static_cast<double>(I));
      ctx.shared_features = gcn_.forward(ctx.a_hat, graph_encoder_.node_features(ctx.skeleton, ctx.base, ctx.bank, uniform));
    }
  }

  // Dependency-head scores for (s, o) given the pair's sentence attention.
  Tensor dep_scores(const DocumentContext& ctx, std::size_t s, std::size_t o, const Tensor& attention_weights,
                    depgraph::NodePath* path_out = nullptr) const {
    const Tensor features =
        cfg_.shared_graph
            ? ctx.shared_features
            : gcn_.forward(ctx.a_hat, graph_encoder_.node_features(ctx.skeleton, ctx.base, ctx.bank, attention_weights));
    const Tensor gs = depgraph::entity_pool(features, ctx.skeleton.entity_mention_nodes[s]);
    const Tensor go = depgraph::entity_pool(features, ctx.skeleton.entity_mention_nodes[o]);
    auto path = depgraph::shortest_node_path(ctx.skeleton, s, o);
    const Tensor rows = depgraph::path_feature(features, path, gs, go);
    if (path_out) *path_out = std::move(path);
    return dep_scorer_(depgraph::pair_representation(gs, go, pair_(gs, go), rows));
  }

  // Scores for the ordered pair of entity positions (s, o).
  RelationScores score_pair(const DocumentContext& ctx, std::size_t s, std::size_t o) const {
    RelationScores out;
    const Tensor& es = ctx.entities.at(s);
    const Tensor& eo = ctx.entities.at(o);
    out.attention = attention_.attend(es, eo, ctx.bank);
    out.z_const = const_scorer_.score(es, eo, out.attention.S);
    out.z_dep = dep_scores(ctx, s, o, out.attention.A, &out.path);
    out.z_final = fuse(out.z_dep, out.z_const, eta_);
    return out;
  }

  // Parameter values, for restoring the best epoch.
  std::vector<std::vector<double>> snapshot() const {
    std::vector<std::vector<double>> out;
    for (const auto& p : store_.all()) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
    return out;
  }

  void restore(const std::vector<std::vector<double>>& values) {
    auto& params = store_.all();
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto dst = params[k].tensor.mutable_values();
      std::copy(values.at(k).begin(), values.at(k).end(), dst.begin());
    }
  }

 private:
  ModelConfig cfg_;
  std::size_t num_classes_ = 0;
  num::ParameterStore store_;
  encoder::Encoder encoder_;
  constituency::TreeLstm tree_;
  constituency::SentenceAttention attention_;
  constituency::ConstituencyScorer const_scorer_;
  depgraph::GraphEncoder graph_encoder_;
  depgraph::Gcn gcn_;
  depgraph::PairTransform pair_;
  depgraph::DependencyScorer dep_scorer_;
  Tensor eta_;
};

// Gold relation classes for the ordered pair of entity positions.
inline std::set<std::size_t> gold_classes(const corpus::AnnotatedDocument& doc, std::size_t s, std::size_t o) {
  std::set<std::size_t> out;
  const int sid = doc.entities.at(s).entity_id, oid = doc.entities.at(o).entity_id;
  for (const auto& f : doc.gold_facts)
    if (f.subject_entity == sid && f.object_entity == oid) out.insert(f.relation_label);
  return out;
}

}  // namespace fcds::model
