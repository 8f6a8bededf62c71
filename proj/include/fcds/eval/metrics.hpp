#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcds/corpus/types.hpp"

namespace fcds::eval {

struct Prediction {
  std::string doc_id;
  int subject = 0;
  int object = 0;
  std::size_t relation = 0;
  double score = 0;
};

using FactKey = std::tuple<std::string, int, int, std::size_t>;

inline FactKey key_of(const Prediction& p) { return {p.doc_id, p.subject, p.object, p.relation}; }

// Predicted facts; a second record for the same (doc, subject, object,
// relation) is refused.
class PredictionSet {
 public:
  bool insert(Prediction p) {
    if (!keys_.insert(key_of(p)).second) return false;
    records_.push_back(std::move(p));
    return true;
  }
  const std::vector<Prediction>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const std::set<FactKey>& keys() const { return keys_; }

 private:
  std::vector<Prediction> records_;
  std::set<FactKey> keys_;
};

struct Score {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  bool empty_slice = false;  // no gold facts in this slice
};

// 0/0 is 0 for precision, recall and F1.
inline Score score_sets(const std::set<FactKey>& predicted, const std::set<FactKey>& gold) {
  Score s;
  for (const auto& k : predicted) (gold.count(k) ? s.tp : s.fp)++;
  s.fn = gold.size() - s.tp;
  s.precision = predicted.empty() ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(predicted.size());
  s.recall = gold.empty() ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(gold.size());
  s.f1 = (s.precision + s.recall) == 0 ? 0.0 : 2 * s.precision * s.recall / (s.precision + s.recall);
  s.empty_slice = gold.empty();
  return s;
}

inline std::set<FactKey> gold_keys(const std::vector<corpus::AnnotatedDocument>& docs) {
  std::set<FactKey> out;
  for (const auto& d : docs)
    for (const auto& f : d.gold_facts) out.insert({d.doc_id, f.subject_entity, f.object_entity, f.relation_label});
  return out;
}

inline Score micro_f1(const PredictionSet& preds, const std::vector<corpus::AnnotatedDocument>& docs) {
  return score_sets(preds.keys(), gold_keys(docs));
}

// Training facts keyed by mention surface strings: (subject text, object
// text, relation) for every mention pair of every training fact.
class TrainFactIndex {
 public:
  TrainFactIndex() = default;
  explicit TrainFactIndex(const std::vector<corpus::AnnotatedDocument>& train) {
    for (const auto& d : train)
      for (const auto& f : d.gold_facts)
        for (const auto& ms : mention_texts(d, f.subject_entity))
          for (const auto& mo : mention_texts(d, f.object_entity)) entries_.insert({ms, mo, f.relation_label});
  }

  bool contains(const corpus::AnnotatedDocument& doc, int subject, int object, std::size_t relation) const {
    for (const auto& ms : mention_texts(doc, subject))
      for (const auto& mo : mention_texts(doc, object))
        if (entries_.count({ms, mo, relation})) return true;
    return false;
  }
  std::size_t size() const { return entries_.size(); }

  static std::vector<std::string> mention_texts(const corpus::AnnotatedDocument& d, int entity_id) {
    std::vector<std::string> out;
    const auto pos = d.entity_position(entity_id);
    if (pos >= d.entities.size()) return out;
    for (const auto& m : d.entities[pos].mentions) out.push_back(d.mention_text(m));
    return out;
  }

 private:
  std::set<std::tuple<std::string, std::string, std::size_t>> entries_;
};

namespace detail {

inline std::map<std::string, const corpus::AnnotatedDocument*> by_id(const std::vector<corpus::AnnotatedDocument>& docs) {
  std::map<std::string, const corpus::AnnotatedDocument*> m;
  for (const auto& d : docs) m[d.doc_id] = &d;
  return m;
}

}  // namespace detail

// Micro F1 after dropping facts shared with the training split from both
// the predictions and the gold set.
inline Score ign_f1(const PredictionSet& preds, const std::vector<corpus::AnnotatedDocument>& docs,
                    const TrainFactIndex& train) {
  const auto docs_by_id = detail::by_id(docs);
  auto shared = [&](const FactKey& k) {
    auto it = docs_by_id.find(std::get<0>(k));
    return it != docs_by_id.end() && train.contains(*it->second, std::get<1>(k), std::get<2>(k), std::get<3>(k));
  };
  std::set<FactKey> p, g;
  for (const auto& k : preds.keys())
    if (!shared(k)) p.insert(k);
  for (const auto& k : gold_keys(docs))
    if (!shared(k)) g.insert(k);
  return score_sets(p, g);
}

// True when some sentence holds mentions of both entities.
inline bool is_intra_sentence(const corpus::AnnotatedDocument& doc, int subject, int object) {
  const auto ps = doc.entity_position(subject), po = doc.entity_position(object);
  if (ps >= doc.entities.size() || po >= doc.entities.size()) return false;
  for (const auto& ms : doc.entities[ps].mentions)
    for (const auto& mo : doc.entities[po].mentions)
      if (ms.sentence_index == mo.sentence_index) return true;
  return false;
}

struct SliceScores {
  Score intra, inter;
};

inline SliceScores intra_inter_f1(const PredictionSet& preds, const std::vector<corpus::AnnotatedDocument>& docs) {
  const auto docs_by_id = detail::by_id(docs);
  auto intra = [&](const FactKey& k) {
    auto it = docs_by_id.find(std::get<0>(k));
    return it != docs_by_id.end() && is_intra_sentence(*it->second, std::get<1>(k), std::get<2>(k));
  };
  std::set<FactKey> pi, pe, gi, ge;
  for (const auto& k : preds.keys()) (intra(k) ? pi : pe).insert(k);
  for (const auto& k : gold_keys(docs)) (intra(k) ? gi : ge).insert(k);
  return {score_sets(pi, gi), score_sets(pe, ge)};
}

struct MetricReport {
  Score overall, ign, intra, inter;

  nlohmann::json to_json() const {
    auto js = [](const Score& s) {
      return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"tp", s.tp},
                            {"fp", s.fp},               {"fn", s.fn},         {"empty_slice", s.empty_slice}};
    };
    return {{"precision", overall.precision}, {"recall", overall.recall}, {"f1", overall.f1},
            {"ign_f1", ign.f1},               {"intra_f1", intra.f1},     {"inter_f1", inter.f1},
            {"overall", js(overall)},         {"ign", js(ign)},           {"intra", js(intra)},
            {"inter", js(inter)}};
  }

  std::string table() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    auto line = [&os](const char* name, const Score& s) {
      os << name << "\tP=" << s.precision << "\tR=" << s.recall << "\tF1=" << s.f1 << "\tTP=" << s.tp
         << " FP=" << s.fp << " FN=" << s.fn << (s.empty_slice ? "\t(empty slice)" : "") << '\n';
    };
    line("overall", overall);
    line("ign    ", ign);
    line("intra  ", intra);
    line("inter  ", inter);
    return os.str();
  }
};

inline MetricReport evaluate(const PredictionSet& preds, const std::vector<corpus::AnnotatedDocument>& docs,
                             const TrainFactIndex& train) {
  MetricReport r;
  r.overall = micro_f1(preds, docs);
  r.ign = ign_f1(preds, docs, train);
  const auto sl = intra_inter_f1(preds, docs);
  r.intra = sl.intra;
  r.inter = sl.inter;
  return r;
}

}  // namespace fcds::eval
