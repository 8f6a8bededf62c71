#pragma once

// Canonical on-disk corpus.
//
// A corpus directory holds `relations.txt` (one relation name per line) and,
// per split, three sibling files:
//   <split>.jsonl    one JSON document record per line
//   <split>.conllu   CoNLL-U dependency parses, "# newdoc id = <doc_id>"
//   <split>.trees    one bracketed constituency tree per sentence, grouped
//                    under the same "# newdoc id = <doc_id>" headers
//
// Record fields: doc_id, sentences (array of token arrays), entities
// (array of {id, type, mentions: [{sent, start, end}]}, sentence-local
// half-open spans), labels (array of {h, t, r, evidence}). `r` may be a
// relation name or its integer index.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcds/corpus/bracketed.hpp"
#include "fcds/corpus/conllu.hpp"
#include "fcds/corpus/types.hpp"
#include "fcds/corpus/validate.hpp"

namespace fcds::corpus {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline LabelSchema load_schema(const fs::path& relations_file) {
  std::istringstream in(read_text(relations_file));
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    auto t = std::string(detail::trim(line));
    if (!t.empty() && t.front() != '#') names.push_back(t);
  }
  return LabelSchema(std::move(names));
}

// doc_id -> tree strings, in file order.
inline std::map<std::string, std::vector<std::string>> split_tree_file(std::string_view text) {
  std::map<std::string, std::vector<std::string>> out;
  std::string doc;
  std::string pending;
  int depth = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = detail::trim(line);
    if (pending.empty()) {
      if (t.empty()) continue;
      if (t.front() == '#') {
        if (auto id = detail::newdoc_id(t); !id.empty()) {
          doc = id;
          out[doc];
        }
        continue;
      }
    }
    if (doc.empty()) throw DataError("tree file line " + std::to_string(line_no) + ": tree before any '# newdoc id' header");
    if (!pending.empty()) pending += ' ';
    pending += t;
    for (char c : t) depth += (c == '(') - (c == ')');
    if (depth <= 0) {
      out[doc].push_back(std::move(pending));
      pending.clear();
      depth = 0;
    }
  }
  if (!pending.empty()) out[doc].push_back(std::move(pending));  // unbalanced; parse reports it
  return out;
}

namespace detail {

inline std::size_t json_index(const nlohmann::json& j, const char* field, const std::string& ctx) {
  if (!j.contains(field)) throw DataError(ctx + ": missing field '" + field + "'");
  const auto& v = j.at(field);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw DataError(ctx + ": field '" + field + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

inline AnnotatedDocument parse_record(const std::string& line, std::size_t line_no, const LabelSchema& schema) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("corpus line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError("corpus line " + std::to_string(line_no) + ": record must be an object");
  AnnotatedDocument doc;
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    throw DataError("corpus line " + std::to_string(line_no) + ": field 'doc_id' missing or not a string");
  doc.doc_id = j["doc_id"].get<std::string>();
  const auto ctx = "doc " + doc.doc_id + " (line " + std::to_string(line_no) + ")";

  if (!j.contains("sentences") || !j["sentences"].is_array())
    throw DataError(ctx + ": field 'sentences' missing or not an array");
  std::size_t global = 0;
  for (std::size_t s = 0; s < j["sentences"].size(); ++s) {
    const auto& sj = j["sentences"][s];
    if (!sj.is_array()) throw DataError(ctx + ": field 'sentences[" + std::to_string(s) + "]' is not an array");
    std::vector<Token> sent;
    for (std::size_t p = 0; p < sj.size(); ++p) {
      if (!sj[p].is_string())
        throw DataError(ctx + ": field 'sentences[" + std::to_string(s) + "][" + std::to_string(p) + "]' is not a string");
      sent.push_back({sj[p].get<std::string>(), s, p, global++});
    }
    doc.sentences.push_back(std::move(sent));
  }

  if (j.contains("entities")) {
    if (!j["entities"].is_array()) throw DataError(ctx + ": field 'entities' is not an array");
    for (std::size_t e = 0; e < j["entities"].size(); ++e) {
      const auto& ej = j["entities"][e];
      const auto ectx = ctx + " entities[" + std::to_string(e) + "]";
      if (!ej.is_object()) throw DataError(ectx + ": not an object");
      Entity ent;
      ent.entity_id = ej.contains("id") ? ej["id"].get<int>() : static_cast<int>(e);
      if (ej.contains("type") && ej["type"].is_string()) ent.type_label = ej["type"].get<std::string>();
      if (!ej.contains("mentions") || !ej["mentions"].is_array()) throw DataError(ectx + ": field 'mentions' missing");
      for (std::size_t m = 0; m < ej["mentions"].size(); ++m) {
        const auto& mj = ej["mentions"][m];
        const auto mctx = ectx + " mentions[" + std::to_string(m) + "]";
        Mention men;
        men.entity_id = ent.entity_id;
        men.sentence_index = json_index(mj, "sent", mctx);
        const auto start = json_index(mj, "start", mctx);
        const auto end = json_index(mj, "end", mctx);
        const auto off = doc.sentence_offset(men.sentence_index);
        men.start = off + start;
        men.end = off + end;
        ent.mentions.push_back(men);
      }
      doc.entities.push_back(std::move(ent));
    }
  }

  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw DataError(ctx + ": field 'labels' is not an array");
    for (std::size_t f = 0; f < j["labels"].size(); ++f) {
      const auto& lj = j["labels"][f];
      const auto lctx = ctx + " labels[" + std::to_string(f) + "]";
      RelationFact fact;
      if (!lj.contains("h") || !lj.contains("t") || !lj.contains("r"))
        throw DataError(lctx + ": fields 'h', 't' and 'r' are required");
      fact.subject_entity = lj["h"].get<int>();
      fact.object_entity = lj["t"].get<int>();
      const auto& r = lj["r"];
      if (r.is_string()) {
        auto idx = schema.index_of(r.get<std::string>());
        if (!idx) throw DataError(lctx + ": field 'r' names unknown relation '" + r.get<std::string>() + "'");
        fact.relation_label = *idx;
      } else if (r.is_number_integer()) {
        fact.relation_label = r.get<std::size_t>();
      } else {
        throw DataError(lctx + ": field 'r' must be a relation name or index");
      }
      if (lj.contains("evidence"))
        for (const auto& ev : lj["evidence"]) fact.evidence_sentences.push_back(ev.get<std::size_t>());
      doc.gold_facts.push_back(std::move(fact));
    }
  }
  return doc;
}

}  // namespace detail

// Loads `<stem>.jsonl` with its `<stem>.conllu` and `<stem>.trees` siblings
// and validates every document.
inline std::vector<AnnotatedDocument> load_corpus(const fs::path& jsonl_path, const LabelSchema& schema) {
  auto sibling = [&](const char* ext) {
    auto p = jsonl_path;
    p.replace_extension(ext);
    return p;
  };
  const auto text = read_text(jsonl_path);
  std::vector<AnnotatedDocument> docs;
  std::vector<std::size_t> lines;
  {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      docs.push_back(detail::parse_record(line, line_no, schema));
      lines.push_back(line_no);
    }
  }

  const auto dep_path = sibling(".conllu");
  const auto tree_path = sibling(".trees");
  if (!fs::exists(dep_path)) throw DataError("missing dependency parse file " + dep_path.string());
  if (!fs::exists(tree_path)) throw DataError("missing constituency parse file " + tree_path.string());

  std::map<std::string, std::vector<DependencyParse>> deps;
  for (auto& p : parse_conllu(read_text(dep_path))) deps[p.doc_id].push_back(std::move(p));
  const auto trees = split_tree_file(read_text(tree_path));

  for (std::size_t d = 0; d < docs.size(); ++d) {
    auto& doc = docs[d];
    const auto ctx = "doc " + doc.doc_id + " (line " + std::to_string(lines[d]) + ")";
    const auto n_sent = doc.sentences.size();
    auto dit = deps.find(doc.doc_id);
    const std::size_t have_deps = dit == deps.end() ? 0 : dit->second.size();
    if (have_deps < n_sent) throw DataError(ctx + " sentence " + std::to_string(have_deps) + ": missing dependency parse");
    if (have_deps > n_sent) throw DataError(ctx + ": " + std::to_string(have_deps - n_sent) + " extra dependency parses");
    doc.dependency_parses = dit == deps.end() ? std::vector<DependencyParse>{} : dit->second;

    auto tit = trees.find(doc.doc_id);
    const std::size_t have_trees = tit == trees.end() ? 0 : tit->second.size();
    if (have_trees < n_sent) throw DataError(ctx + " sentence " + std::to_string(have_trees) + ": missing constituency tree");
    if (have_trees > n_sent) throw DataError(ctx + ": " + std::to_string(have_trees - n_sent) + " extra constituency trees");
    for (std::size_t s = 0; s < n_sent; ++s) {
      try {
        doc.constituency_trees.push_back(
            parse_bracketed_tree(tit->second[s], doc.sentences[s].size(), doc.sentence_offset(s)));
      } catch (const DataError& e) {
        throw DataError(ctx + " sentence " + std::to_string(s) + ": " + e.what());
      }
    }

    const auto report = validate_document(doc, schema.size());
    if (!report.empty()) {
      std::string msg = ctx + ": " + report.front().str();
      if (report.size() > 1) msg += " (+" + std::to_string(report.size() - 1) + " more)";
      throw DataError(msg);
    }
  }
  return docs;
}

inline std::vector<AnnotatedDocument> load_split(const fs::path& dir, const std::string& split, const LabelSchema& schema) {
  return load_corpus(dir / (split + ".jsonl"), schema);
}

inline nlohmann::json to_record(const AnnotatedDocument& doc, const LabelSchema& schema) {
  nlohmann::json j;
  j["doc_id"] = doc.doc_id;
  j["sentences"] = nlohmann::json::array();
  for (const auto& s : doc.sentences) {
    auto arr = nlohmann::json::array();
    for (const auto& t : s) arr.push_back(t.surface);
    j["sentences"].push_back(arr);
  }
  j["entities"] = nlohmann::json::array();
  for (const auto& e : doc.entities) {
    nlohmann::json ej;
    ej["id"] = e.entity_id;
    ej["type"] = e.type_label;
    ej["mentions"] = nlohmann::json::array();
    for (const auto& m : e.mentions) {
      const auto off = doc.sentence_offset(m.sentence_index);
      ej["mentions"].push_back({{"sent", m.sentence_index}, {"start", m.start - off}, {"end", m.end - off}});
    }
    j["entities"].push_back(ej);
  }
  j["labels"] = nlohmann::json::array();
  for (const auto& f : doc.gold_facts) {
    nlohmann::json lj;
    lj["h"] = f.subject_entity;
    lj["t"] = f.object_entity;
    if (f.relation_label < schema.size())
      lj["r"] = schema.name(f.relation_label);
    else
      lj["r"] = f.relation_label;
    lj["evidence"] = f.evidence_sentences;
    j["labels"].push_back(lj);
  }
  return j;
}

// Writes the three split files (and relations.txt) into `dir`.
inline void write_corpus(const fs::path& dir, const std::string& split, const std::vector<AnnotatedDocument>& docs,
                         const LabelSchema& schema) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "relations.txt");
    for (const auto& n : schema.names()) out << n << '\n';
  }
  std::ofstream jsonl(dir / (split + ".jsonl")), conllu(dir / (split + ".conllu")), trees(dir / (split + ".trees"));
  if (!jsonl || !conllu || !trees) throw DataError("cannot write corpus files into " + dir.string());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    jsonl << to_record(doc, schema).dump() << '\n';
    conllu << "# newdoc id = " << doc.doc_id << '\n';
    for (const auto& p : doc.dependency_parses) write_conllu_sentence(conllu, p);
    if (d) trees << '\n';
    trees << "# newdoc id = " << doc.doc_id << '\n';
    for (const auto& t : doc.constituency_trees) trees << to_bracketed(t) << '\n';
  }
}

}  // namespace fcds::corpus
