#pragma once

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fcds/corpus/types.hpp"

namespace fcds::corpus {

namespace detail {

inline std::string unescape_ptb(std::string_view w) {
  if (w == "-LRB-") return "(";
  if (w == "-RRB-") return ")";
  return std::string(w);
}

inline std::string escape_ptb(const std::string& w) {
  if (w == "(") return "-LRB-";
  if (w == ")") return "-RRB-";
  std::string out;
  for (char c : w) out += (std::isspace(static_cast<unsigned char>(c)) ? '_' : c);
  return out;
}

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  ConstituencyNode parse_tree() {
    skip_space();
    if (at_end()) throw error("empty input");
    if (peek() != '(') throw error("tree must start with '('");
    auto node = parse_node();
    skip_space();
    if (!at_end()) throw error("trailing text after tree");
    return node;
  }

 private:
  ConstituencyNode parse_node() {
    const std::size_t open_at = pos_;
    ++pos_;  // '('
    skip_space();
    ConstituencyNode node;
    if (!at_end() && peek() != '(' && peek() != ')') node.label = word();
    while (true) {
      skip_space();
      if (at_end()) throw error("unbalanced parentheses: node opened at offset " + std::to_string(open_at) + " is never closed");
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (peek() == '(') {
        node.children.push_back(parse_node());
      } else {
        ConstituencyNode leaf;
        leaf.label = unescape_ptb(word());
        node.children.push_back(std::move(leaf));
      }
    }
    if (node.children.empty()) throw error("empty node '" + node.label + "' at offset " + std::to_string(open_at));
    return node;
  }

  std::string word() {
    const auto start = pos_;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '(' && peek() != ')') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  DataError error(const std::string& msg) const { return DataError("bracketed tree: " + msg); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void number_leaves(ConstituencyNode& n, std::size_t& next) {
  if (n.is_leaf()) {
    n.leaf_token = next++;
    return;
  }
  n.leaf_token.reset();
  for (auto& c : n.children) number_leaves(c, next);
}

}  // namespace detail

// Parses one Penn-Treebank-style S-expression. Leaves are numbered with
// global token indices starting at `first_token`. When `sentence_length`
// is given the leaf count must equal it.
inline ConstituencyNode parse_bracketed_tree(std::string_view text, std::optional<std::size_t> sentence_length = {},
                                             std::size_t first_token = 0) {
  auto tree = detail::BracketReader(text).parse_tree();
  std::size_t next = first_token;
  detail::number_leaves(tree, next);
  const auto leaves = next - first_token;
  if (sentence_length && leaves != *sentence_length)
    throw DataError("bracketed tree: leaf count " + std::to_string(leaves) + " does not match sentence length " +
                    std::to_string(*sentence_length));
  return tree;
}

inline void write_bracketed(std::ostream& os, const ConstituencyNode& n) {
  if (n.is_leaf()) {
    os << detail::escape_ptb(n.label);
    return;
  }
  os << '(' << n.label;
  for (const auto& c : n.children) {
    os << ' ';
    write_bracketed(os, c);
  }
  os << ')';
}

inline std::string to_bracketed(const ConstituencyNode& n) {
  std::ostringstream os;
  write_bracketed(os, n);
  return os.str();
}

}  // namespace fcds::corpus
