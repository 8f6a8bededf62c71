#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fcds/corpus/conllu.hpp"
#include "fcds/corpus/types.hpp"

namespace fcds::corpus {

struct Violation {
  std::string where;  // e.g. "sentence 2", "entity 3 mention 0"
  std::string what;

  std::string str() const { return where + ": " + what; }
  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

namespace detail {

inline void check_tree_shape(const ConstituencyNode& n, const std::string& where, ValidationReport& out) {
  if (n.is_leaf() != n.leaf_token.has_value())
    out.push_back({where, n.is_leaf() ? "leaf node without token index" : "inner node carries a token index"});
  for (const auto& c : n.children) check_tree_shape(c, where, out);
}

}  // namespace detail

// Every invariant violation in the document, in a fixed order: tokens,
// entities and mentions, facts, dependency parses, constituency trees.
// `num_classes` enables the relation-label range check.
inline ValidationReport validate_document(const AnnotatedDocument& doc,
                                          std::optional<std::size_t> num_classes = std::nullopt) {
  ValidationReport out;
  const auto n_sent = doc.sentences.size();
  if (doc.doc_id.empty()) out.push_back({"document", "empty doc_id"});

  std::size_t global = 0;
  for (std::size_t s = 0; s < n_sent; ++s) {
    if (doc.sentences[s].empty()) out.push_back({"sentence " + std::to_string(s), "empty sentence"});
    for (std::size_t p = 0; p < doc.sentences[s].size(); ++p, ++global) {
      const auto& t = doc.sentences[s][p];
      const auto where = "sentence " + std::to_string(s) + " token " + std::to_string(p);
      if (t.surface.empty()) out.push_back({where, "empty token surface"});
      if (t.sentence_index != s || t.position_in_sentence != p || t.global_index != global)
        out.push_back({where, "token index fields inconsistent with position"});
    }
  }

  std::set<int> ids;
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    const auto& ent = doc.entities[e];
    const auto where = "entity " + std::to_string(ent.entity_id);
    if (!ids.insert(ent.entity_id).second) out.push_back({where, "duplicate entity id"});
    if (ent.mentions.empty()) out.push_back({where, "entity has no mentions"});
    for (std::size_t m = 0; m < ent.mentions.size(); ++m) {
      const auto& men = ent.mentions[m];
      const auto mwhere = where + " mention " + std::to_string(m);
      if (men.entity_id != ent.entity_id) out.push_back({mwhere, "mention refers to a different entity"});
      if (men.start >= men.end) {
        out.push_back({mwhere, "empty or reversed span"});
        continue;
      }
      if (men.sentence_index >= n_sent) {
        out.push_back({mwhere, "sentence index out of range"});
        continue;
      }
      const auto lo = doc.sentence_offset(men.sentence_index);
      const auto hi = lo + doc.sentences[men.sentence_index].size();
      if (men.start < lo || men.end > hi) out.push_back({mwhere, "span crosses a sentence boundary"});
    }
  }

  for (std::size_t f = 0; f < doc.gold_facts.size(); ++f) {
    const auto& fact = doc.gold_facts[f];
    const auto where = "fact " + std::to_string(f);
    if (fact.subject_entity == fact.object_entity) out.push_back({where, "subject equals object"});
    if (!ids.count(fact.subject_entity)) out.push_back({where, "unknown subject entity"});
    if (!ids.count(fact.object_entity)) out.push_back({where, "unknown object entity"});
    if (num_classes && fact.relation_label >= *num_classes) out.push_back({where, "relation label out of range"});
    for (auto ev : fact.evidence_sentences)
      if (ev >= n_sent) out.push_back({where, "evidence sentence out of range"});
  }

  if (doc.dependency_parses.size() != n_sent)
    out.push_back({"document", "expected " + std::to_string(n_sent) + " dependency parses, found " +
                                   std::to_string(doc.dependency_parses.size())});
  for (std::size_t s = 0; s < std::min(n_sent, doc.dependency_parses.size()); ++s) {
    const auto& p = doc.dependency_parses[s];
    const auto where = "sentence " + std::to_string(s) + " dependency parse";
    const auto n = doc.sentences[s].size();
    if (p.size() != n) {
      out.push_back({where, "length " + std::to_string(p.size()) + " differs from sentence length " + std::to_string(n)});
      continue;
    }
    for (std::size_t i = 0; i < n && i < p.forms.size(); ++i)
      if (p.forms[i] != doc.sentences[s][i].surface)
        out.push_back({where, "form '" + p.forms[i] + "' differs from token '" + doc.sentences[s][i].surface + "'"});
    bool range_ok = true;
    for (auto h : p.heads)
      if (h > n) range_ok = false;
    if (!range_ok) {
      out.push_back({where, "head out of range"});
      continue;
    }
    std::size_t roots = 0;
    for (auto h : p.heads) roots += (h == 0);
    if (roots == 0) out.push_back({where, "no root"});
    if (roots > 1) out.push_back({where, "multiple roots"});
    if (find_cycle(p.heads) < n) out.push_back({where, "head cycle"});
  }

  if (doc.constituency_trees.size() != n_sent)
    out.push_back({"document", "expected " + std::to_string(n_sent) + " constituency trees, found " +
                                   std::to_string(doc.constituency_trees.size())});
  for (std::size_t s = 0; s < std::min(n_sent, doc.constituency_trees.size()); ++s) {
    const auto where = "sentence " + std::to_string(s) + " constituency tree";
    const auto& tree = doc.constituency_trees[s];
    detail::check_tree_shape(tree, where, out);
    std::vector<const ConstituencyNode*> leaves;
    collect_leaves(tree, leaves);
    const auto& sent = doc.sentences[s];
    bool aligned = leaves.size() == sent.size();
    for (std::size_t i = 0; aligned && i < leaves.size(); ++i)
      aligned = leaves[i]->label == sent[i].surface && leaves[i]->leaf_token == sent[i].global_index;
    if (!aligned) out.push_back({where, "leaf/token misalignment"});
  }
  return out;
}

}  // namespace fcds::corpus
