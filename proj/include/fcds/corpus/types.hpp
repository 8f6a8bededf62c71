#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcds/errors.hpp"

namespace fcds::corpus {

struct Token {
  std::string surface;
  std::size_t sentence_index = 0;
  std::size_t position_in_sentence = 0;
  std::size_t global_index = 0;

  bool operator==(const Token&) const = default;
};

// token span is half-open over global token indices
struct Mention {
  int entity_id = 0;
  std::size_t sentence_index = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Mention&) const = default;
};

struct Entity {
  int entity_id = 0;
  std::vector<Mention> mentions;
  std::string type_label;

  bool operator==(const Entity&) const = default;
};

struct RelationFact {
  int subject_entity = 0;
  int object_entity = 0;
  std::size_t relation_label = 0;
  std::vector<std::size_t> evidence_sentences;

  bool operator==(const RelationFact&) const = default;
};

// One sentence. heads[i] is 0 for the root, else the 1-based position of
// token i's head.
struct DependencyParse {
  std::string doc_id;
  std::vector<std::string> forms;
  std::vector<std::size_t> heads;
  std::vector<std::string> deprels;

  std::size_t size() const { return heads.size(); }
  bool operator==(const DependencyParse&) const = default;
};

struct ConstituencyNode {
  std::string label;
  std::vector<ConstituencyNode> children;
  std::optional<std::size_t> leaf_token;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const ConstituencyNode&) const = default;
};

inline void collect_leaves(const ConstituencyNode& n, std::vector<const ConstituencyNode*>& out) {
  if (n.is_leaf()) {
    out.push_back(&n);
    return;
  }
  for (const auto& c : n.children) collect_leaves(c, out);
}

inline std::size_t node_count(const ConstituencyNode& n) {
  std::size_t k = 1;
  for (const auto& c : n.children) k += node_count(c);
  return k;
}

struct AnnotatedDocument {
  std::string doc_id;
  std::vector<std::vector<Token>> sentences;
  std::vector<Entity> entities;
  std::vector<RelationFact> gold_facts;
  std::vector<DependencyParse> dependency_parses;
  std::vector<ConstituencyNode> constituency_trees;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
  std::size_t sentence_offset(std::size_t i) const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < i && k < sentences.size(); ++k) n += sentences[k].size();
    return n;
  }
  std::vector<const Token*> tokens() const {
    std::vector<const Token*> out;
    for (const auto& s : sentences)
      for (const auto& t : s) out.push_back(&t);
    return out;
  }
  std::size_t mention_count() const {
    std::size_t n = 0;
    for (const auto& e : entities) n += e.mentions.size();
    return n;
  }
  // Position of the entity with this id, or entities.size() when absent.
  std::size_t entity_position(int id) const {
    for (std::size_t i = 0; i < entities.size(); ++i)
      if (entities[i].entity_id == id) return i;
    return entities.size();
  }
  std::string mention_text(const Mention& m) const {
    auto toks = tokens();
    std::string out;
    for (std::size_t g = m.start; g < m.end && g < toks.size(); ++g) {
      if (!out.empty()) out += ' ';
      out += toks[g]->surface;
    }
    return out;
  }

  bool operator==(const AnnotatedDocument&) const = default;
};

// Relation names indexed 0..C-1. The NA pseudo-class sits at index C in
// every score vector and is never one of the names.
class LabelSchema {
 public:
  static constexpr const char* kNaName = "NA";

  LabelSchema() = default;
  explicit LabelSchema(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw DataError("relation name at index " + std::to_string(i) + " is empty");
      if (names_[i] == kNaName) throw DataError("relation name NA is reserved");
      if (!seen.insert(names_[i]).second) throw DataError("duplicate relation name: " + names_[i]);
      index_[names_[i]] = i;
    }
  }

  std::size_t size() const { return names_.size(); }
  std::size_t na_index() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace fcds::corpus
