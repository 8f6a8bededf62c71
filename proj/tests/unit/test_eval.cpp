#include <gtest/gtest.h>

#include "../common/oracles.hpp"
#include "fcds/eval/metrics.hpp"
#include "fcds/synth/generator.hpp"

using namespace fcds;
using eval::Prediction;
using eval::PredictionSet;

namespace {

// One sentence per entity (so no pair co-occurs) unless `together` is set,
// in which case all mentions share the first sentence.
corpus::AnnotatedDocument named_doc(const std::string& id, const std::vector<std::string>& names,
                                    const std::vector<std::tuple<int, int, std::size_t>>& facts, bool together = false) {
  synth::DocumentBuilder b(id);
  if (together) {
    oracle::add_chain_sentence(b, names);
    for (std::size_t i = 0; i < names.size(); ++i) b.add_mention(static_cast<int>(i), 0, i, 1);
  } else {
    for (std::size_t i = 0; i < names.size(); ++i) {
      oracle::add_chain_sentence(b, {names[i], "is", "here"});
      b.add_mention(static_cast<int>(i), i, 0, 1);
    }
  }
  for (auto [s, o, r] : facts) b.add_fact(s, o, r, 0);
  return b.finish();
}

PredictionSet preds_of(const std::vector<oracle::Fact>& facts) {
  PredictionSet p;
  for (const auto& [d, s, o, r] : facts) p.insert({d, s, o, r, 1.0});
  return p;
}

}  // namespace

TEST(MicroF1, FourSevenths) {
  const auto d = named_doc("d", {"A", "B", "C", "D", "E"}, {{0, 1, 0}, {1, 2, 0}, {2, 3, 1}, {3, 4, 2}});
  const auto s = eval::micro_f1(preds_of({{"d", 0, 1, 0}, {"d", 1, 2, 0}, {"d", 0, 4, 3}}), {d});
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_NEAR(s.f1, 4.0 / 7.0, 1e-15);
  EXPECT_EQ(s.tp, 2u);
  EXPECT_EQ(s.fp, 1u);
  EXPECT_EQ(s.fn, 2u);
}

TEST(MicroF1, EmptyAndPerfectConventions) {
  const auto d = named_doc("d", {"A", "B"}, {{0, 1, 0}});
  const auto none = eval::micro_f1(PredictionSet{}, {d});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(eval::micro_f1(preds_of({{"d", 0, 1, 0}}), {d}).f1, 1.0);
  const auto empty_gold = named_doc("e", {"A", "B"}, {});
  const auto s = eval::micro_f1(preds_of({{"e", 0, 1, 0}}), {empty_gold});
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_TRUE(s.empty_slice);
}

TEST(MicroF1, DuplicatesRejectedAndOrderIrrelevant) {
  const auto d = named_doc("d", {"A", "B", "C"}, {{0, 1, 0}, {1, 2, 1}});
  PredictionSet p;
  EXPECT_TRUE(p.insert({"d", 0, 1, 0, 0.3}));
  EXPECT_FALSE(p.insert({"d", 0, 1, 0, 0.9}));
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(eval::micro_f1(p, {d}).tp, 1u);

  num::Rng rng(5);
  std::vector<oracle::Fact> facts{{"d", 0, 1, 0}, {"d", 1, 2, 1}, {"d", 2, 0, 1}, {"d", 0, 2, 3}};
  const auto base = eval::micro_f1(preds_of(facts), {d});
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(facts);
    const auto s = eval::micro_f1(preds_of(facts), {d});
    EXPECT_EQ(s.f1, base.f1);
    EXPECT_EQ(s.tp, base.tp);
  }
}

TEST(IgnF1, TwoFifths) {
  const auto train = named_doc("t", {"A", "B"}, {{0, 1, 0}});
  const auto dev = named_doc("d", {"A", "B", "C", "D"}, {{0, 1, 0}, {0, 2, 0}, {1, 2, 1}, {2, 3, 0}});
  const eval::TrainFactIndex idx({train});
  const auto p = preds_of({{"d", 0, 1, 0}, {"d", 0, 2, 0}, {"d", 1, 3, 1}});
  const auto s = eval::ign_f1(p, {dev}, idx);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 1.0 / 3.0);
  EXPECT_NEAR(s.f1, 0.4, 1e-15);
  // the shared fact is keyed by surfaces, so relation and direction matter
  EXPECT_FALSE(idx.contains(dev, 1, 0, 0));
  EXPECT_FALSE(idx.contains(dev, 0, 1, 1));
}

TEST(IgnF1, NoOverlapEqualsF1AndFullOverlapIsZero) {
  const auto dev = named_doc("d", {"A", "B", "C"}, {{0, 1, 0}, {1, 2, 1}});
  const auto p = preds_of({{"d", 0, 1, 0}, {"d", 2, 1, 1}});
  const auto unrelated = named_doc("t", {"X", "Y"}, {{0, 1, 0}});
  EXPECT_EQ(eval::ign_f1(p, {dev}, eval::TrainFactIndex({unrelated})).f1, eval::micro_f1(p, {dev}).f1);
  const eval::TrainFactIndex all({dev});
  const auto s = eval::ign_f1(p, {dev}, all);
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_TRUE(s.empty_slice);
}

TEST(Slices, IntraCorrectInterMissed) {
  // A and B share sentence 0; C sits alone in sentence 1
  synth::DocumentBuilder b("s");
  oracle::add_chain_sentence(b, {"A", "met", "B"});
  oracle::add_chain_sentence(b, {"C", "left"});
  b.add_mention(0, 0, 0, 1);
  b.add_mention(1, 0, 2, 1);
  b.add_mention(2, 1, 0, 1);
  b.add_fact(0, 1, 0, 0);
  b.add_fact(0, 2, 1, 1);
  const auto d = b.finish();
  const auto sl = eval::intra_inter_f1(preds_of({{"s", 0, 1, 0}}), {d});
  EXPECT_EQ(sl.intra.f1, 1.0);
  EXPECT_EQ(sl.inter.f1, 0.0);
  EXPECT_FALSE(sl.inter.empty_slice);
}

TEST(Slices, AllIntraCorpusFlagsEmptyInterSlice) {
  const auto d = named_doc("t", {"A", "B", "C"}, {{0, 1, 0}, {2, 1, 1}}, true);
  const auto sl = eval::intra_inter_f1(preds_of({{"t", 0, 1, 0}}), {d});
  EXPECT_TRUE(sl.inter.empty_slice);
  EXPECT_EQ(sl.inter.f1, 0.0);
  EXPECT_FALSE(sl.intra.empty_slice);
  const auto report = eval::evaluate(preds_of({{"t", 0, 1, 0}}), {d}, {});
  EXPECT_NE(report.table().find("(empty slice)"), std::string::npos);
  EXPECT_TRUE(report.to_json().at("inter").at("empty_slice").get<bool>());
}

TEST(Report, JsonCarriesEveryField) {
  const auto d = named_doc("d", {"A", "B", "C"}, {{0, 1, 0}, {1, 2, 1}});
  const auto r = eval::evaluate(preds_of({{"d", 0, 1, 0}}), {d}, {});
  const auto j = r.to_json();
  for (const char* k : {"precision", "recall", "f1", "ign_f1", "intra_f1", "inter_f1"}) {
    ASSERT_TRUE(j.contains(k)) << k;
    EXPECT_GE(j.at(k).get<double>(), 0.0);
    EXPECT_LE(j.at(k).get<double>(), 1.0);
  }
  for (const char* k : {"overall", "ign", "intra", "inter"})
    for (const char* c : {"tp", "fp", "fn", "empty_slice"}) EXPECT_TRUE(j.at(k).contains(c)) << k << "." << c;
  EXPECT_EQ(j.at("overall").at("tp").get<std::size_t>(), 1u);
  EXPECT_EQ(j.at("overall").at("fn").get<std::size_t>(), 1u);
}

TEST(Metrics, MatchBruteForceOracleOnRandomConfigurations) {
  num::Rng rng(2024);
  synth::RandomDocumentOptions opt;
  opt.fact_probability = 0.35;
  std::size_t configs_with_shared = 0, configs_with_both_slices = 0;
  for (int config = 0; config < 50; ++config) {
    std::vector<corpus::AnnotatedDocument> train, dev;
    for (int i = 0; i < 3; ++i) train.push_back(synth::random_document(rng, opt, "t" + std::to_string(i)));
    for (int i = 0; i < 4; ++i) dev.push_back(synth::random_document(rng, opt, "d" + std::to_string(i)));
    if (config % 2 == 0) {
      // a renamed copy shares every surface form with one dev document
      train.push_back(dev[rng.below(dev.size())]);
      train.back().doc_id = "copy";
    }
    std::vector<oracle::Fact> raw;
    for (const auto& f : oracle::gold_facts(dev))
      if (rng.coin(0.6)) raw.push_back(f);
    for (int k = 0; k < 8; ++k) {
      const auto& d = dev[rng.below(dev.size())];
      const int s = d.entities[rng.below(d.entities.size())].entity_id;
      const int o = d.entities[rng.below(d.entities.size())].entity_id;
      if (s != o) raw.emplace_back(d.doc_id, s, o, rng.below(opt.num_classes));
    }
    raw.emplace_back("unknown-doc", 0, 1, 0);
    if (!raw.empty()) raw.push_back(raw[rng.below(raw.size())]);  // duplicate attempt
    rng.shuffle(raw);

    const auto want = oracle::evaluate(raw, dev, train);
    const auto got = eval::evaluate(preds_of(raw), dev, eval::TrainFactIndex(train));
    auto same = [&](const eval::Score& g, const oracle::Counts& w, const char* what) {
      EXPECT_EQ(g.tp, w.tp) << what << " config " << config;
      EXPECT_EQ(g.tp + g.fp, w.predicted) << what << " config " << config;
      EXPECT_EQ(g.tp + g.fn, w.gold) << what << " config " << config;
      EXPECT_NEAR(g.precision, w.precision, 1e-15) << what;
      EXPECT_NEAR(g.recall, w.recall, 1e-15) << what;
      EXPECT_NEAR(g.f1, w.f1, 1e-15) << what;
    };
    same(got.overall, want.overall, "overall");
    same(got.ign, want.ign, "ign");
    same(got.intra, want.intra, "intra");
    same(got.inter, want.inter, "inter");
    EXPECT_EQ(got.intra.tp + got.inter.tp, got.overall.tp);
    EXPECT_EQ(got.intra.tp + got.intra.fn + got.inter.tp + got.inter.fn, got.overall.tp + got.overall.fn);
    configs_with_shared += want.ign.gold < want.overall.gold;
    configs_with_both_slices += want.intra.gold > 0 && want.inter.gold > 0;
  }
  // the random corpora exercise the filters, not just the trivial cases
  EXPECT_GT(configs_with_shared, 10u);
  EXPECT_GT(configs_with_both_slices, 5u);
}
