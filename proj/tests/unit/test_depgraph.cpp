#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "../common/oracles.hpp"
#include "fcds/depgraph/gcn.hpp"
#include "fcds/depgraph/graph.hpp"
#include "fcds/depgraph/path.hpp"
#include "fcds/depgraph/scoring.hpp"
#include "fcds/depgraph/stats.hpp"
#include "fcds/numerics/grad_check.hpp"

using namespace fcds;
using depgraph::EdgeKind;
using depgraph::NodeKind;
using num::Tensor;

namespace {

Tensor random_tensor(num::Rng& rng, num::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(num::detail::checked_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), true);
}

std::vector<std::string> words(std::size_t n, const std::string& p = "w") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(p + std::to_string(i));
  return out;
}

corpus::AnnotatedDocument two_sentence_doc() {
  synth::DocumentBuilder b("g");
  oracle::add_chain_sentence(b, words(5, "a"));
  oracle::add_chain_sentence(b, words(4, "b"));
  b.add_mention(0, 0, 0, 2);
  b.add_mention(1, 0, 3, 1);
  b.add_mention(1, 1, 2, 1);
  return b.finish();
}

std::size_t count_kind(const depgraph::GraphSkeleton& g, EdgeKind k) {
  return static_cast<std::size_t>(std::count_if(g.edges.begin(), g.edges.end(), [k](const auto& e) { return e.kind == k; }));
}

std::size_t nonzero_rows(const Tensor& t) {
  std::size_t n = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    bool any = false;
    for (std::size_t c = 0; c < t.cols(); ++c) any |= t.at(r, c) != 0.0;
    n += any;
  }
  return n;
}

}  // namespace

TEST(Skeleton, NodeCountAndKinds) {
  const auto d = two_sentence_doc();
  const auto g = depgraph::build_skeleton(d);
  EXPECT_EQ(g.size(), 13u);
  EXPECT_EQ(g.root_nodes, (std::vector<std::size_t>{0, 5}));
  ASSERT_TRUE(g.document_node);
  EXPECT_EQ(*g.document_node, 12u);
  std::size_t roots = 0, docs = 0, mentions = 0;
  for (const auto& n : g.nodes) {
    roots += n.kind == NodeKind::RootToken;
    docs += n.kind == NodeKind::Document;
    mentions += n.kind == NodeKind::Mention;
  }
  EXPECT_EQ(roots, 2u);
  EXPECT_EQ(docs, 1u);
  EXPECT_EQ(mentions, 3u);
  EXPECT_EQ(count_kind(g, EdgeKind::Dependency), 4u + 3u);
  EXPECT_EQ(count_kind(g, EdgeKind::MentionToken), 2u + 1u + 1u);
  EXPECT_EQ(count_kind(g, EdgeKind::AdjacentRoot), 1u);
  EXPECT_EQ(count_kind(g, EdgeKind::RootDocument), 2u);
  EXPECT_EQ(count_kind(g, EdgeKind::LongRangeRoot), 0u);
  EXPECT_EQ(g.entity_mention_nodes, (std::vector<std::vector<std::size_t>>{{9}, {10, 11}}));
}

TEST(Skeleton, NodeCountIdentityOnRandomDocuments) {
  num::Rng rng(3);
  synth::RandomDocumentOptions opt;
  for (int i = 0; i < 100; ++i) {
    const auto d = synth::random_document(rng, opt, "r");
    const auto g = depgraph::build_skeleton(d);
    EXPECT_EQ(g.size(), d.token_count() + d.mention_count() + 1);
    EXPECT_EQ(g.root_nodes.size(), d.sentences.size());
    const auto I = d.sentences.size();
    EXPECT_EQ(count_kind(g, EdgeKind::LongRangeRoot), I >= 2 ? (I - 1) * (I - 2) / 2 : 0);
    for (const auto& e : g.edges)
      if (e.kind == EdgeKind::LongRangeRoot) EXPECT_GT(g.nodes[e.to].sentence, g.nodes[e.from].sentence + 1);
  }
}

TEST(Skeleton, SingleSentenceRootTouchesOnlyTokensAndDocument) {
  synth::DocumentBuilder b("one");
  oracle::add_chain_sentence(b, words(4));
  b.add_mention(0, 0, 2, 1);
  b.add_mention(1, 0, 3, 1);
  const auto g = depgraph::build_skeleton(b.finish());
  EXPECT_EQ(count_kind(g, EdgeKind::AdjacentRoot), 0u);
  EXPECT_EQ(count_kind(g, EdgeKind::LongRangeRoot), 0u);
  for (auto v : g.neighbors[g.root_nodes[0]])
    EXPECT_TRUE(g.nodes[v].kind == NodeKind::Token || g.nodes[v].kind == NodeKind::Document);
}

TEST(Skeleton, AblatedGraphDropsDocumentConnectivity) {
  num::Rng rng(8);
  synth::RandomDocumentOptions opt;
  opt.min_sentences = 3;
  const auto d = synth::random_document(rng, opt, "ab");
  const auto g = depgraph::build_skeleton(d, false);
  EXPECT_FALSE(g.document_node);
  EXPECT_EQ(g.size(), d.token_count() + d.mention_count());
  EXPECT_EQ(count_kind(g, EdgeKind::RootDocument), 0u);
  EXPECT_EQ(count_kind(g, EdgeKind::LongRangeRoot), 0u);
  EXPECT_EQ(count_kind(g, EdgeKind::AdjacentRoot), d.sentences.size() - 1);
}

TEST(Adjacency, SymmetricOnesAndDirectedCosines) {
  num::Rng rng(12);
  synth::DocumentBuilder b("adj");
  for (int s = 0; s < 4; ++s) oracle::add_chain_sentence(b, words(2 + s));
  b.add_mention(0, 0, 0, 1);
  b.add_mention(1, 3, 1, 1);
  const auto d = b.finish();
  const auto g = depgraph::build_skeleton(d);
  const constituency::SentenceBank bank{random_tensor(rng, {4, 5})};
  const auto adj = depgraph::build_adjacency(g, bank);
  const auto n = g.size();
  auto cos = [&](std::size_t i, std::size_t j) {
    double dot = 0, a = 0, c = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      dot += bank.V.at(i, k) * bank.V.at(j, k);
      a += bank.V.at(i, k) * bank.V.at(i, k);
      c += bank.V.at(j, k) * bank.V.at(j, k);
    }
    return dot / std::sqrt(a * c);
  };
  std::size_t directed = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& ni = g.nodes[i];
      const auto& nj = g.nodes[j];
      const bool roots = ni.kind == NodeKind::RootToken && nj.kind == NodeKind::RootToken;
      if (roots && nj.sentence > ni.sentence + 1) {
        EXPECT_NEAR(adj.at(i, j), cos(ni.sentence, nj.sentence), 1e-12);
        EXPECT_EQ(adj.at(j, i), 0.0);
        EXPECT_LE(std::abs(adj.at(i, j)), 1.0);
        ++directed;
      } else if (!(roots && ni.sentence > nj.sentence + 1)) {
        EXPECT_EQ(adj.at(i, j), adj.at(j, i));
        EXPECT_TRUE(adj.at(i, j) == 0.0 || adj.at(i, j) == 1.0);
      }
    }
  EXPECT_EQ(directed, 3u);
}

TEST(Adjacency, IdenticalSentenceVectorsGiveUnitWeight) {
  num::Rng rng(13);
  synth::DocumentBuilder b("same");
  for (int s = 0; s < 3; ++s) oracle::add_chain_sentence(b, words(2));
  b.add_mention(0, 0, 0, 1);
  b.add_mention(1, 2, 0, 1);
  const auto g = depgraph::build_skeleton(b.finish());
  const auto row = random_tensor(rng, {4});
  const auto adj = depgraph::build_adjacency(g, {num::stack({row, row, row})});
  EXPECT_NEAR(adj.at(g.root_nodes[0], g.root_nodes[2]), 1.0, 1e-15);
}

TEST(Adjacency, NormalizedRowsHaveUnitAbsoluteSum) {
  num::Rng rng(14);
  synth::RandomDocumentOptions opt;
  opt.min_sentences = 3;
  for (int t = 0; t < 20; ++t) {
    const auto d = synth::random_document(rng, opt, "n");
    const auto g = depgraph::build_skeleton(d);
    const auto adj = depgraph::build_adjacency(g, {random_tensor(rng, {d.sentences.size(), 3})});
    const auto a_hat = depgraph::normalized_adjacency(adj);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double s = 0;
      for (std::size_t j = 0; j < g.size(); ++j) s += std::abs(a_hat.at(i, j));
      EXPECT_NEAR(s, 1.0, 1e-12);
      // node i aggregates from the edges pointing into it
      double raw = 1.0;
      for (std::size_t j = 0; j < g.size(); ++j) raw += std::abs(adj.at(j, i));
      for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_NEAR(a_hat.at(i, j), (adj.at(j, i) + (i == j ? 1.0 : 0.0)) / raw, 1e-14);
    }
  }
}

TEST(Gcn, IsolatedNodesOnlySeeThemselves) {
  num::ParameterStore store;
  num::Rng rng(21);
  depgraph::Gcn gcn(store, rng, 3, 3);
  const auto x = random_tensor(rng, {4, 3});
  const auto a_hat = depgraph::normalized_adjacency(Tensor::zeros({4, 4}));
  const auto out = gcn.forward(a_hat, x);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto alone = gcn.forward(Tensor::from({1, 1}, {1.0}), num::reshape(num::row(x, i), {1, 3}));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out.at(i, k), alone.at(0, k));
  }
}

TEST(Gcn, PermutationEquivariance) {
  num::ParameterStore store;
  num::Rng rng(22);
  const std::size_t n = 7, w = 4;
  depgraph::Gcn gcn(store, rng, w, 3);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> raw(n * n, 0.0);
    for (auto& v : raw)
      if (rng.coin(0.4)) v = rng.coin(0.7) ? 1.0 : rng.uniform(-1, 1);
    const auto adj = Tensor::from({n, n}, raw);
    const auto x = random_tensor(rng, {n, w});
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    // new node i is old node perm[i]
    std::vector<double> padj(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) padj[i * n + j] = raw[perm[i] * n + perm[j]];
    const auto out = gcn.forward(depgraph::normalized_adjacency(adj), x);
    const auto pout = gcn.forward(depgraph::normalized_adjacency(Tensor::from({n, n}, padj)), num::gather(x, perm));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < w; ++k) EXPECT_NEAR(pout.at(i, k), out.at(perm[i], k), 1e-13);
  }
}

TEST(Gcn, ThreeLayerGradient) {
  num::ParameterStore store;
  num::Rng rng(23);
  depgraph::Gcn gcn(store, rng, 4, 3);
  const auto adj = depgraph::build_adjacency(depgraph::build_skeleton(two_sentence_doc()), {random_tensor(rng, {2, 3})});
  const auto x = random_tensor(rng, {13, 4});
  const auto probe = random_tensor(rng, {13, 4});
  auto f = [&] { return num::sum(num::mul(gcn.forward(depgraph::normalized_adjacency(adj), x), probe)); };
  auto wrt = store.tensors();
  wrt.push_back(x);
  EXPECT_LE(num::grad_check(f, wrt, 1e-5), 1e-4);
}

TEST(Path, MatchesBreadthFirstOracleOnRandomDocuments) {
  num::Rng rng(41);
  synth::RandomDocumentOptions opt;
  for (int t = 0; t < 100; ++t) {
    const auto d = synth::random_document(rng, opt, "p");
    for (bool with_doc : {true, false}) {
      const auto g = depgraph::build_skeleton(d, with_doc);
      for (std::size_t s = 0; s < d.entities.size(); ++s)
        for (std::size_t o = 0; o < d.entities.size(); ++o) {
          if (s == o) continue;
          const auto want = oracle::lexmin_shortest_path(g, g.entity_mention_nodes[s], g.entity_mention_nodes[o]);
          const auto got = depgraph::shortest_node_path(g, s, o);
          EXPECT_EQ(got.nodes, want);
          EXPECT_EQ(got.connected, !want.empty());
          if (with_doc) EXPECT_TRUE(got.connected);
        }
    }
  }
}

TEST(Path, SameSentenceNeighboursGoThroughTheirTokens) {
  synth::DocumentBuilder b("adj");
  oracle::add_chain_sentence(b, words(4));
  b.add_mention(0, 0, 1, 1);
  b.add_mention(1, 0, 2, 1);
  const auto g = depgraph::build_skeleton(b.finish());
  const auto p = depgraph::shortest_node_path(g, 0, 1);
  EXPECT_EQ(p.nodes, (std::vector<std::size_t>{4, 1, 2, 5}));
  num::Rng rng(1);
  const auto feats = random_tensor(rng, {g.size(), 3});
  const auto es = random_tensor(rng, {3}), eo = random_tensor(rng, {3});
  const auto rows = depgraph::path_feature(feats, p, es, eo);
  EXPECT_EQ(rows.shape(), (num::Shape{14, 3}));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(rows.at(0, k), es[k]);
    EXPECT_EQ(rows.at(1, k), feats.at(1, k));
    EXPECT_EQ(rows.at(2, k), feats.at(2, k));
    EXPECT_EQ(rows.at(3, k), eo[k]);
  }
  EXPECT_EQ(nonzero_rows(rows), 4u);
}

TEST(Path, DirectlyLinkedOrDisconnectedGiveTwoRows) {
  num::Rng rng(2);
  const auto feats = random_tensor(rng, {6, 3});
  const auto es = random_tensor(rng, {3}), eo = random_tensor(rng, {3});
  for (const auto& p : {depgraph::NodePath{{0, 5}, true}, depgraph::NodePath{}}) {
    const auto rows = depgraph::path_feature(feats, p, es, eo);
    EXPECT_EQ(rows.rows(), 14u);
    EXPECT_EQ(nonzero_rows(rows), 2u);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(rows.at(0, k), es[k]);
      EXPECT_EQ(rows.at(1, k), eo[k]);
    }
  }
}

TEST(Path, LongChainKeepsFirstTwelveInterior) {
  num::Rng rng(4);
  const auto feats = random_tensor(rng, {22, 2});
  depgraph::NodePath p;
  for (std::size_t i = 0; i < 22; ++i) p.nodes.push_back(i);
  p.connected = true;
  const auto es = random_tensor(rng, {2}), eo = random_tensor(rng, {2});
  const auto rows = depgraph::path_feature(feats, p, es, eo);
  EXPECT_EQ(rows.rows(), 14u);
  for (std::size_t r = 1; r <= 12; ++r)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(rows.at(r, k), feats.at(r, k));
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(rows.at(13, k), eo[k]);
}

TEST(Path, RowCountRuleOnRandomDocuments) {
  num::Rng rng(43);
  synth::RandomDocumentOptions opt;
  opt.max_length = 12;
  for (int t = 0; t < 50; ++t) {
    const auto d = synth::random_document(rng, opt, "rc");
    if (d.entities.size() < 2) continue;
    const auto g = depgraph::build_skeleton(d);
    const auto feats = random_tensor(rng, {g.size(), 2}, 0.5, 1.0);
    const auto es = random_tensor(rng, {2}, 0.5, 1.0), eo = random_tensor(rng, {2}, 0.5, 1.0);
    const auto p = depgraph::shortest_node_path(g, 0, 1);
    const auto rows = depgraph::path_feature(feats, p, es, eo);
    EXPECT_EQ(rows.rows(), 14u);
    EXPECT_EQ(nonzero_rows(rows), std::min<std::size_t>(p.nodes.size(), 14));
  }
}

TEST(Stats, DocumentNodeBoundsCrossSentenceDistance) {
  // entities in sentences 0 and 3, each on a child of its sentence root
  synth::DocumentBuilder b("far");
  for (int s = 0; s < 4; ++s) oracle::add_chain_sentence(b, words(6));
  b.add_mention(0, 0, 1, 1);
  b.add_mention(1, 3, 1, 1);
  const auto d = b.finish();
  const auto with = depgraph::pair_distances(d, true);
  const auto without = depgraph::pair_distances(d, false);
  const auto g = depgraph::build_skeleton(d);
  const auto oracle_path = oracle::lexmin_shortest_path(g, g.entity_mention_nodes[0], g.entity_mention_nodes[1]);
  ASSERT_EQ(with.size(), 1u);
  EXPECT_EQ(with[0], oracle_path.size() - 1);
  EXPECT_LE(with[0], 6u);
  // m - t - root - root - t - m over the long-range root edge
  EXPECT_EQ(with[0], 5u);
  EXPECT_EQ(without[0], 1u + 1u + 3u + 1u + 1u);
}

TEST(Stats, DocumentNodeNeverIncreasesDistances) {
  num::Rng rng(44);
  synth::RandomDocumentOptions opt;
  std::vector<corpus::AnnotatedDocument> docs;
  for (int t = 0; t < 100; ++t) {
    docs.push_back(synth::random_document(rng, opt, "s" + std::to_string(t)));
    std::size_t lost = 0;
    const auto with = depgraph::pair_distances(docs.back(), true, &lost);
    EXPECT_EQ(lost, 0u);
    std::size_t cut = 0;
    const auto without = depgraph::pair_distances(docs.back(), false, &cut);
    EXPECT_EQ(cut, 0u);
    ASSERT_EQ(with.size(), without.size());
    for (std::size_t i = 0; i < with.size(); ++i) EXPECT_LE(with[i], without[i]);
  }
  const auto a = depgraph::graph_distance_stats(docs, true), b = depgraph::graph_distance_stats(docs, false);
  EXPECT_LE(a.avg, b.avg);
  EXPECT_LE(a.max, b.max);
  EXPECT_EQ(a.pairs, b.pairs);
}

TEST(Stats, SummaryMatchesHandComputation) {
  const auto d = two_sentence_doc();
  // entity 0 is tokens 0-1, entity 1 has token 3 and token 7
  const auto ds = depgraph::pair_distances(d, false);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0], 4u);  // m - t1 - t2 - t3 - m
  const auto st = depgraph::graph_distance_stats({d, d}, false);
  EXPECT_EQ(st.pairs, 2u);
  EXPECT_EQ(st.avg, 4.0);
  EXPECT_EQ(st.std, 0.0);
  EXPECT_EQ(st.min, 4u);
  EXPECT_EQ(st.max, 4u);
  EXPECT_EQ(depgraph::graph_distance_stats({}, true).pairs, 0u);
}

TEST(Pool, LogsumexpIdentities) {
  num::Rng rng(51);
  const auto feats = random_tensor(rng, {4, 3});
  const auto one = depgraph::entity_pool(feats, {2});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(one[k], feats.at(2, k));
  const auto dup = num::stack({num::row(feats, 1), num::row(feats, 1)});
  const auto two = depgraph::entity_pool(dup, {0, 1});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(two[k], feats.at(1, k) + std::log(2.0), 1e-15);
  const auto all = depgraph::entity_pool(feats, {0, 1, 3});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_GE(all[k], std::max({feats.at(0, k), feats.at(1, k), feats.at(3, k)}));
}

TEST(PairTransform, ZeroWeightsAndHomogeneity) {
  num::ParameterStore store;
  num::Rng rng(52);
  depgraph::PairTransform pt(store, rng, 4, 5);
  const auto es = random_tensor(rng, {4}), eo = random_tensor(rng, {4});
  for (auto& v : pt.w_p2().mutable_values()) v = 0.0;
  const auto base = pt(es, eo), doubled = pt(num::scale(es, 2.0), eo);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(doubled[k], 2 * base[k]);
  for (std::size_t k = 0; k < 5; ++k)
    if (base[k] < 0) EXPECT_NEAR(base[k] / 0.01, num::matmul(es, pt.w_p1())[k], 1e-15);
  for (auto& v : pt.w_p1().mutable_values()) v = 0.0;
  const auto zero = pt(es, eo);
  for (auto v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST(PairTransform, GradientMatchesFiniteDifferences) {
  num::ParameterStore store;
  num::Rng rng(53);
  depgraph::PairTransform pt(store, rng, 4, 5);
  const auto es = random_tensor(rng, {4}), eo = random_tensor(rng, {4});
  const auto probe = random_tensor(rng, {5});
  auto f = [&] { return num::sum(num::mul(pt(es, eo), probe)); };
  for (Tensor x : {es, eo, pt.w_p1(), pt.w_p2()}) {
    x.zero_grad();
    num::backward(f());
    std::vector<double> analytic(x.grad().begin(), x.grad().end());
    EXPECT_LE(oracle::max_rel_diff(analytic, oracle::fd_gradient(f, x)), 1e-5);
  }
}

TEST(DependencyScorer, ZeroWeightsAndShift) {
  num::ParameterStore store;
  num::Rng rng(54);
  depgraph::DependencyScorer dep(store, rng, 6, 4, 3);
  const auto in = random_tensor(rng, {6});
  const auto z = dep(in);
  auto argmax = [](const Tensor& t) {
    return std::max_element(t.values().begin(), t.values().end()) - t.values().begin();
  };
  Tensor bias = store.get("dep.b_d2");
  const std::vector<double> before(bias.values().begin(), bias.values().end());
  for (auto& v : bias.mutable_values()) v += 0.75;
  const auto shifted = dep(in);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(shifted[r] - z[r], 0.75, 1e-15);
  EXPECT_EQ(argmax(shifted), argmax(z));
  for (auto& p : store.all())
    for (auto& v : p.tensor.mutable_values()) v = 0.0;
  const auto zero = dep(in);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(zero[r], 0.0);
  std::copy(before.begin(), before.end(), bias.mutable_values().begin());
  const auto only_bias = dep(in);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(only_bias[r], before[r]);
  EXPECT_EQ(depgraph::pair_representation(random_tensor(rng, {2}), random_tensor(rng, {2}), random_tensor(rng, {3}),
                                          Tensor::zeros({14, 5}))
                .numel(),
            2 * 2 + 3 + 14 * 5);
}

TEST(DependencyBranch, EndToEndGradient) {
  num::ParameterStore store;
  num::Rng rng(61);
  synth::DocumentBuilder b("e2e");
  oracle::add_chain_sentence(b, words(3, "a"));
  oracle::add_chain_sentence(b, words(2, "b"));
  oracle::add_chain_sentence(b, words(3, "c"));
  b.add_mention(0, 0, 1, 2);
  b.add_mention(1, 2, 0, 1);
  b.add_mention(0, 1, 1, 1);
  const auto d = b.finish();
  const auto vocab = encoder::Vocabulary::build({d});
  encoder::Encoder enc(store, rng, {3, 2}, vocab.size());
  constituency::TreeLstm tree(store, rng, 4, 4);
  constituency::SentenceAttention attn(store, rng, 4, 4, 2);
  depgraph::GraphEncoder genc(store, rng, 4, 4, {3, 3});
  depgraph::Gcn gcn(store, rng, 3, 3);
  depgraph::PairTransform pt(store, rng, 3, 2);
  depgraph::DependencyScorer dep(store, rng, 3 + 3 + 2 + 14 * 3, 3, 3);
  // attention keys only reach the score through the document node, so their
  // gradients are tiny at default scale; larger weights and step keep the
  // central differences above rounding noise
  for (auto& p : store.all())
    for (auto& v : p.tensor.mutable_values()) v = rng.uniform(-1, 1);
  auto f = [&] {
    const auto h = enc.encode(d, vocab);
    std::vector<constituency::TreeStates> st;
    for (std::size_t s = 0; s < d.sentences.size(); ++s)
      st.push_back(tree.forward(d.constituency_trees[s], [&](std::size_t g) { return h.token_row(g); }));
    const auto bank = constituency::sentence_vectors(st);
    const auto es0 = encoder::entity_embedding(h, d.entities[0]), eo0 = encoder::entity_embedding(h, d.entities[1]);
    const auto graph = depgraph::build_graph(d, h, bank, attn.attend(es0, eo0, bank), genc);
    const auto q = gcn.forward(depgraph::normalized_adjacency(graph.adjacency), graph.features);
    const auto es = depgraph::entity_pool(q, graph.skeleton.entity_mention_nodes[0]);
    const auto eo = depgraph::entity_pool(q, graph.skeleton.entity_mention_nodes[1]);
    const auto path = depgraph::path_feature(q, depgraph::shortest_node_path(graph.skeleton, 0, 1), es, eo);
    const auto z = dep(depgraph::pair_representation(es, eo, pt(es, eo), path));
    return num::sum(num::mul(z, Tensor::vector({0.4, -1.0, 0.7})));
  };
  EXPECT_LE(num::grad_check(f, store.tensors(), 1e-3), 1e-4);
}
