#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "fcds/corpus/bracketed.hpp"
#include "fcds/corpus/types.hpp"
#include "fcds/numerics/parameters.hpp"

// Synthetic corpora: a small relation corpus whose labels follow from the
// verb on the syntax path between mentions, and fully random documents for
// property tests.
namespace fcds::synth {

// Appends sentences and mentions while keeping every index consistent.
class DocumentBuilder {
 public:
  explicit DocumentBuilder(std::string doc_id) { doc_.doc_id = std::move(doc_id); }

  // `heads` are 1-based with 0 for the root; `tree` is bracketed text whose
  // leaves are exactly `words`.
  std::size_t add_sentence(const std::vector<std::string>& words, const std::vector<std::size_t>& heads,
                           const std::vector<std::string>& deprels, const std::string& tree) {
    const auto s = doc_.sentences.size();
    const auto offset = doc_.token_count();
    std::vector<corpus::Token> toks;
    for (std::size_t i = 0; i < words.size(); ++i) toks.push_back({words[i], s, i, offset + i});
    doc_.sentences.push_back(std::move(toks));
    doc_.dependency_parses.push_back({doc_.doc_id, words, heads, deprels});
    doc_.constituency_trees.push_back(corpus::parse_bracketed_tree(tree, words.size(), offset));
    return s;
  }

  void add_mention(int entity_key, std::size_t sentence, std::size_t start, std::size_t length) {
    const auto off = doc_.sentence_offset(sentence);
    mentions_[entity_key].push_back({entity_key, sentence, off + start, off + start + length});
  }

  void add_fact(int subject_key, int object_key, std::size_t relation, std::size_t evidence) {
    facts_.push_back({subject_key, object_key, relation, {evidence}});
  }

  // Entities without mentions are dropped; the rest get ids 0.. in key
  // order, and facts touching dropped entities are discarded.
  corpus::AnnotatedDocument finish() {
    std::map<int, int> id_of;
    for (auto& [key, ms] : mentions_) {
      const int id = static_cast<int>(doc_.entities.size());
      id_of[key] = id;
      std::sort(ms.begin(), ms.end(), [](const corpus::Mention& a, const corpus::Mention& b) { return a.start < b.start; });
      for (auto& m : ms) m.entity_id = id;
      doc_.entities.push_back({id, ms, ""});
    }
    for (auto f : facts_) {
      if (!id_of.count(f.subject_entity) || !id_of.count(f.object_entity)) continue;
      f.subject_entity = id_of[f.subject_entity];
      f.object_entity = id_of[f.object_entity];
      if (std::find(doc_.gold_facts.begin(), doc_.gold_facts.end(), f) == doc_.gold_facts.end())
        doc_.gold_facts.push_back(f);
    }
    return doc_;
  }

 private:
  corpus::AnnotatedDocument doc_;
  std::map<int, std::vector<corpus::Mention>> mentions_;
  std::vector<corpus::RelationFact> facts_;
};

inline corpus::LabelSchema relation_schema() { return corpus::LabelSchema({"founded", "lives_in", "works_for", "married"}); }

namespace detail {

inline const std::vector<std::string>& persons() {
  static const std::vector<std::string> v{"Anna", "Boris", "Clara", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas"};
  return v;
}
inline const std::vector<std::string>& orgs() {
  static const std::vector<std::string> v{"Acme", "Borealis", "Cobalt", "Dynamo", "Everest", "Fjord"};
  return v;
}
inline const std::vector<std::string>& cities() {
  static const std::vector<std::string> v{"Oslo", "Lima", "Kyoto", "Quito", "Dakar", "Perth"};
  return v;
}

// "X verb Y ."
inline void transitive(DocumentBuilder& b, const std::string& x, const std::string& verb, const std::string& y, int kx,
                       int ky, std::size_t* sentence = nullptr) {
  const auto s = b.add_sentence({x, verb, y, "."}, {2, 0, 2, 2}, {"nsubj", "root", "obj", "punct"},
                                "(S (NP " + x + ") (VP (VBD " + verb + ") (NP " + y + ")) (. .))");
  b.add_mention(kx, s, 0, 1);
  b.add_mention(ky, s, 2, 1);
  if (sentence) *sentence = s;
}

// "X verb prep Y ."
inline void prepositional(DocumentBuilder& b, const std::string& x, const std::string& verb, const std::string& prep,
                          const std::string& y, int kx, int ky, std::size_t* sentence = nullptr) {
  const auto s = b.add_sentence({x, verb, prep, y, "."}, {2, 0, 4, 2, 2}, {"nsubj", "root", "case", "obl", "punct"},
                                "(S (NP " + x + ") (VP (VBZ " + verb + ") (PP (IN " + prep + ") (NP " + y +
                                    "))) (. .))");
  b.add_mention(kx, s, 0, 1);
  b.add_mention(ky, s, 3, 1);
  if (sentence) *sentence = s;
}

inline void filler(DocumentBuilder& b, num::Rng& rng) {
  static const std::vector<std::string> nouns{"weather", "market", "season", "harvest"};
  static const std::vector<std::string> adjs{"mild", "quiet", "busy", "late"};
  const auto n = nouns[rng.below(nouns.size())], a = adjs[rng.below(adjs.size())];
  b.add_sentence({"The", n, "was", a, "."}, {2, 4, 4, 0, 4}, {"det", "nsubj", "cop", "root", "punct"},
                 "(S (NP (DT The) (NN " + n + ")) (VP (VBD was) (ADJP (JJ " + a + "))) (. .))");
}

inline void remention(DocumentBuilder& b, const std::string& x, int kx) {
  const auto s = b.add_sentence({x, "smiled", "."}, {2, 0, 2}, {"nsubj", "root", "punct"},
                                "(S (NP " + x + ") (VP (VBD smiled)) (. .))");
  b.add_mention(kx, s, 0, 1);
}

}  // namespace detail

// Documents over two people, an organization and a city. Relation
// sentences: "P founded O", "P lives in C", "P works for O",
// "P married Q"; "P visited C" is a distractor with no relation. Filler
// and re-mention sentences are mixed in.
inline std::vector<corpus::AnnotatedDocument> relation_corpus(std::size_t documents, std::uint64_t seed,
                                                              const std::string& prefix = "syn") {
  num::Rng rng(seed);
  std::vector<corpus::AnnotatedDocument> out;
  enum Kind { Founded, LivesIn, WorksFor, Married, Visited };
  for (std::size_t d = 0; d < documents; ++d) {
    auto ps = detail::persons();
    rng.shuffle(ps);
    const std::string p1 = ps[0], p2 = ps[1];
    const std::string org = detail::orgs()[rng.below(detail::orgs().size())];
    const std::string city = detail::cities()[rng.below(detail::cities().size())];
    enum Key { P1, P2, Org, City };

    struct Plan {
      Kind kind;
      int x, y;
    };
    std::vector<Plan> plans;
    // founded plus three of the four other sentence kinds
    plans.push_back({Founded, P1, Org});
    std::vector<Plan> optional{{LivesIn, P1, City}, {WorksFor, P2, Org}, {Married, P1, P2}, {Visited, P2, City}};
    rng.shuffle(optional);
    plans.insert(plans.end(), optional.begin(), optional.begin() + 3);
    const std::size_t extras = rng.below(3);
    DocumentBuilder b(prefix + std::to_string(d));
    const std::string names[] = {p1, p2, org, city};

    std::vector<int> order;
    for (std::size_t i = 0; i < plans.size(); ++i) order.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < extras; ++i) order.push_back(-1 - static_cast<int>(i));
    rng.shuffle(order);
    for (int slot : order) {
      if (slot < 0) {
        if (rng.coin()) detail::filler(b, rng);
        else {
          const int who = rng.coin() ? P1 : P2;
          detail::remention(b, names[who], who);
        }
        continue;
      }
      const auto& pl = plans[static_cast<std::size_t>(slot)];
      std::size_t s = 0;
      switch (pl.kind) {
        case Founded: detail::transitive(b, names[pl.x], "founded", names[pl.y], pl.x, pl.y, &s); break;
        case Married: detail::transitive(b, names[pl.x], "married", names[pl.y], pl.x, pl.y, &s); break;
        case LivesIn: detail::prepositional(b, names[pl.x], "lives", "in", names[pl.y], pl.x, pl.y, &s); break;
        case WorksFor: detail::prepositional(b, names[pl.x], "works", "for", names[pl.y], pl.x, pl.y, &s); break;
        case Visited: detail::transitive(b, names[pl.x], "visited", names[pl.y], pl.x, pl.y, &s); break;
      }
      if (pl.kind != Visited) b.add_fact(pl.x, pl.y, static_cast<std::size_t>(pl.kind), s);
    }
    out.push_back(b.finish());
  }
  return out;
}

struct RandomDocumentOptions {
  std::size_t min_sentences = 1, max_sentences = 5;
  std::size_t min_length = 1, max_length = 7;
  std::size_t min_entities = 2, max_entities = 5;
  std::size_t max_mentions = 3;
  std::size_t num_classes = 4;
  double fact_probability = 0.3;
};

namespace detail {

// Random bracketing of words [a, b) with preterminals over single words.
inline std::string random_bracketing(num::Rng& rng, const std::vector<std::string>& words, std::size_t a,
                                     std::size_t b) {
  if (b - a == 1) return "(X " + words[a] + ")";
  const std::size_t parts = std::min<std::size_t>(b - a, 2 + rng.below(2));
  std::vector<std::size_t> cuts;
  for (std::size_t i = a + 1; i < b; ++i) cuts.push_back(i);
  rng.shuffle(cuts);
  cuts.resize(parts - 1);
  std::sort(cuts.begin(), cuts.end());
  std::string out = "(P";
  std::size_t lo = a;
  cuts.push_back(b);
  for (auto hi : cuts) {
    out += " " + random_bracketing(rng, words, lo, hi);
    lo = hi;
  }
  return out + ")";
}

}  // namespace detail

// Random but valid document: random dependency trees, random bracketings,
// non-overlapping single- or two-token mentions and random facts.
inline corpus::AnnotatedDocument random_document(num::Rng& rng, const RandomDocumentOptions& opt,
                                                 const std::string& doc_id) {
  auto pick = [&rng](std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); };
  DocumentBuilder b(doc_id);
  const auto n_sent = pick(opt.min_sentences, opt.max_sentences);
  std::vector<std::vector<bool>> used;
  for (std::size_t s = 0; s < n_sent; ++s) {
    const auto n = pick(opt.min_length, opt.max_length);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(rng.below(20)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> heads(n, 0);
    for (std::size_t k = 1; k < n; ++k) heads[order[k]] = order[rng.below(k)] + 1;
    b.add_sentence(words, heads, std::vector<std::string>(n, "dep"), detail::random_bracketing(rng, words, 0, n));
    used.emplace_back(n, false);
  }
  const auto n_ent = pick(opt.min_entities, opt.max_entities);
  for (std::size_t e = 0; e < n_ent; ++e) {
    const auto n_men = pick(1, opt.max_mentions);
    for (std::size_t m = 0; m < n_men; ++m) {
      const auto s = rng.below(n_sent);
      const auto start = rng.below(used[s].size());
      const std::size_t len = (start + 1 < used[s].size() && rng.coin(0.3)) ? 2 : 1;
      bool free = true;
      for (std::size_t i = start; i < start + len; ++i) free = free && !used[s][i];
      if (!free) continue;
      for (std::size_t i = start; i < start + len; ++i) used[s][i] = true;
      b.add_mention(static_cast<int>(e), s, start, len);
    }
  }
  for (std::size_t s = 0; s < n_ent; ++s)
    for (std::size_t o = 0; o < n_ent; ++o)
      if (s != o && rng.coin(opt.fact_probability))
        b.add_fact(static_cast<int>(s), static_cast<int>(o), rng.below(opt.num_classes), 0);
  return b.finish();
}

}  // namespace fcds::synth
