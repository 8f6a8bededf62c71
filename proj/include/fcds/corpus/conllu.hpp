#pragma once

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fcds/corpus/types.hpp"

namespace fcds::corpus {

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// "# newdoc id = X" -> X, else empty
inline std::string newdoc_id(std::string_view line) {
  line = trim(line);
  if (line.empty() || line.front() != '#') return {};
  line.remove_prefix(1);
  line = trim(line);
  constexpr std::string_view key = "newdoc";
  if (line.substr(0, key.size()) != key) return {};
  line.remove_prefix(key.size());
  line = trim(line);
  constexpr std::string_view id = "id";
  if (line.substr(0, id.size()) != id) return {};
  line.remove_prefix(id.size());
  line = trim(line);
  if (line.empty() || line.front() != '=') return {};
  line.remove_prefix(1);
  return std::string(trim(line));
}

}  // namespace detail

// Index of the first token on a head cycle, or size() if the heads form a
// forest hanging off 0.
inline std::size_t find_cycle(const std::vector<std::size_t>& heads) {
  const auto n = heads.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cur = i + 1, steps = 0;
    while (cur != 0 && steps <= n) {
      if (cur > n) return n;  // out of range is reported separately
      cur = heads[cur - 1];
      ++steps;
    }
    if (cur != 0) return i;
  }
  return n;
}

// One DependencyParse per sentence block, tagged with the most recent
// "# newdoc id" comment. Multiword-token and empty-node lines are rejected.
inline std::vector<DependencyParse> parse_conllu(std::string_view text) {
  std::vector<DependencyParse> out;
  std::string doc_id;
  DependencyParse cur;
  std::size_t sentence_ordinal = 0;
  std::size_t line_no = 0;
  std::vector<std::size_t> token_lines;

  auto fail = [&](std::size_t line, const std::string& msg) -> DataError {
    return DataError("CoNLL-U sentence " + std::to_string(sentence_ordinal) + " (line " + std::to_string(line) +
                     "): " + msg);
  };
  auto flush = [&] {
    if (cur.heads.empty()) return;
    const auto n = cur.heads.size();
    for (std::size_t i = 0; i < n; ++i)
      if (cur.heads[i] > n)
        throw fail(token_lines[i], "head " + std::to_string(cur.heads[i]) + " out of range for " +
                                       std::to_string(n) + "-token sentence");
    if (auto c = find_cycle(cur.heads); c < n) throw fail(token_lines[c], "head cycle through token " + std::to_string(c + 1));
    cur.doc_id = doc_id;
    out.push_back(std::move(cur));
    cur = {};
    token_lines.clear();
    ++sentence_ordinal;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) {
      flush();
      if (nl == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      if (auto id = detail::newdoc_id(line); !id.empty()) {
        flush();
        doc_id = id;
      }
      if (nl == text.size()) break;
      continue;
    }
    auto cols = detail::split(line, '\t');
    if (cols.size() != 10) throw fail(line_no, "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    if (cols[0].find('-') != std::string_view::npos) throw fail(line_no, "multiword token lines are not supported");
    if (cols[0].find('.') != std::string_view::npos) throw fail(line_no, "empty node lines are not supported");
    std::size_t id = 0, head = 0;
    if (!detail::parse_size(cols[0], id)) throw fail(line_no, "non-integer token id '" + std::string(cols[0]) + "'");
    if (id != cur.heads.size() + 1)
      throw fail(line_no, "token id " + std::to_string(id) + " out of sequence (expected " +
                              std::to_string(cur.heads.size() + 1) + ")");
    if (!detail::parse_size(cols[6], head)) throw fail(line_no, "non-integer head '" + std::string(cols[6]) + "'");
    cur.forms.emplace_back(cols[1]);
    cur.heads.push_back(head);
    cur.deprels.emplace_back(cols[7]);
    token_lines.push_back(line_no);
    if (nl == text.size()) break;
  }
  flush();
  return out;
}

inline void write_conllu_sentence(std::ostream& os, const DependencyParse& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << (i + 1) << '\t' << (i < p.forms.size() ? p.forms[i] : "_") << "\t_\t_\t_\t_\t" << p.heads[i] << '\t'
       << (i < p.deprels.size() && !p.deprels[i].empty() ? p.deprels[i] : "_") << "\t_\t_\n";
  }
  os << '\n';
}

}  // namespace fcds::corpus
