#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fcds/errors.hpp"

namespace fcds::model {

struct ModelConfig {
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 32;  // per LSTM direction
  std::size_t vocab_min_count = 1;
  std::size_t tree_state_dim = 256;
  std::size_t attention_heads = 2;
  std::size_t const_hidden = 64;
  std::size_t root_fusion_hidden = 64;
  std::size_t gcn_layers = 3;
  std::size_t gcn_dim = 128;
  std::size_t pair_dim = 64;
  std::size_t score_hidden = 64;
  bool shared_graph = false;  // one attention-free graph pass per document
};

struct TrainConfig {
  double learning_rate = 5e-5;
  double weight_decay = 1e-4;
  double margin = 1.0;
  double warmup_ratio = 0.06;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  std::size_t accum_docs = 1;
  std::size_t patience = 10;
  ModelConfig model;
};

namespace detail {

struct Field {
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

inline std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw UsageError("config key " + key + ": expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw UsageError("config key " + key + ": expected a number, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config key " + key + ": expected true or false, got '" + v + "'");
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T, class Parse, class Format>
std::pair<const std::string, Field> field(const char* name, T& (*ref)(TrainConfig&), Parse parse, Format format) {
  return {name,
          {[=](TrainConfig& c, const std::string& v) { ref(c) = parse(name, v); },
           [=](const TrainConfig& c) { return format(ref(const_cast<TrainConfig&>(c))); }}};
}

inline std::string fmt_size(std::size_t v) { return std::to_string(v); }
inline std::string fmt_bool(bool v) { return v ? "true" : "false"; }

#define FCDS_REF(T, member) +[](TrainConfig& c) -> T& { return c.member; }

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      field("learning_rate", FCDS_REF(double, learning_rate), to_double, fmt),
      field("weight_decay", FCDS_REF(double, weight_decay), to_double, fmt),
      field("margin", FCDS_REF(double, margin), to_double, fmt),
      field("warmup_ratio", FCDS_REF(double, warmup_ratio), to_double, fmt),
      field("epochs", FCDS_REF(std::size_t, epochs), to_size, fmt_size),
      field("seed", FCDS_REF(std::uint64_t, seed), to_size, fmt_size),
      field("accum_docs", FCDS_REF(std::size_t, accum_docs), to_size, fmt_size),
      field("patience", FCDS_REF(std::size_t, patience), to_size, fmt_size),
      field("embedding_dim", FCDS_REF(std::size_t, model.embedding_dim), to_size, fmt_size),
      field("hidden_dim", FCDS_REF(std::size_t, model.hidden_dim), to_size, fmt_size),
      field("vocab_min_count", FCDS_REF(std::size_t, model.vocab_min_count), to_size, fmt_size),
      field("tree_state_dim", FCDS_REF(std::size_t, model.tree_state_dim), to_size, fmt_size),
      field("attention_heads", FCDS_REF(std::size_t, model.attention_heads), to_size, fmt_size),
      field("const_hidden", FCDS_REF(std::size_t, model.const_hidden), to_size, fmt_size),
      field("root_fusion_hidden", FCDS_REF(std::size_t, model.root_fusion_hidden), to_size, fmt_size),
      field("gcn_layers", FCDS_REF(std::size_t, model.gcn_layers), to_size, fmt_size),
      field("gcn_dim", FCDS_REF(std::size_t, model.gcn_dim), to_size, fmt_size),
      field("pair_dim", FCDS_REF(std::size_t, model.pair_dim), to_size, fmt_size),
      field("score_hidden", FCDS_REF(std::size_t, model.score_hidden), to_size, fmt_size),
      field("shared_graph", FCDS_REF(bool, model.shared_graph), to_bool, fmt_bool),
  };
  return table;
}

#undef FCDS_REF

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

inline void validate(const TrainConfig& c) {
  if (!(c.warmup_ratio > 0 && c.warmup_ratio < 1)) throw UsageError("warmup_ratio must lie in (0, 1)");
  if (!(c.margin > 0)) throw UsageError("margin must be positive");
  if (!(c.learning_rate > 0)) throw UsageError("learning_rate must be positive");
  if (c.weight_decay < 0) throw UsageError("weight_decay must be nonnegative");
  if (c.accum_docs == 0) throw UsageError("accum_docs must be at least 1");
  const auto& m = c.model;
  for (auto [name, v] : std::vector<std::pair<const char*, std::size_t>>{
           {"embedding_dim", m.embedding_dim}, {"hidden_dim", m.hidden_dim}, {"tree_state_dim", m.tree_state_dim},
           {"attention_heads", m.attention_heads}, {"const_hidden", m.const_hidden},
           {"root_fusion_hidden", m.root_fusion_hidden}, {"gcn_layers", m.gcn_layers}, {"gcn_dim", m.gcn_dim},
           {"pair_dim", m.pair_dim}, {"score_hidden", m.score_hidden}})
    if (v == 0) throw UsageError(std::string(name) + " must be positive");
  if (m.tree_state_dim % m.attention_heads != 0) throw UsageError("attention_heads must divide tree_state_dim");
}

// `key = value` per line; blank lines and lines starting with '#' are
// skipped. Unknown keys are rejected.
inline TrainConfig parse_config(const std::string& text, TrainConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(t.substr(0, eq)), value = detail::trim(t.substr(eq + 1));
    auto it = detail::fields().find(key);
    if (it == detail::fields().end()) throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second.set(base, value);
  }
  validate(base);
  return base;
}

// Canonical text: every key, sorted, one per line. Round-trips through
// parse_config.
inline std::string to_text(const TrainConfig& c) {
  std::string out;
  for (const auto& [k, f] : detail::fields()) out += k + " = " + f.get(c) + "\n";
  return out;
}

inline void apply_seed_override(TrainConfig& c) {
  if (const char* s = std::getenv("FCDS_SEED"); s && *s) c.seed = detail::to_size("FCDS_SEED", s);
}

// Small dimensions for finite-difference checks and quick runs.
inline ModelConfig tiny_model_config() {
  ModelConfig m;
  m.embedding_dim = 4;
  m.hidden_dim = 3;
  m.tree_state_dim = 4;
  m.attention_heads = 2;
  m.const_hidden = 3;
  m.root_fusion_hidden = 3;
  m.gcn_layers = 2;
  m.gcn_dim = 4;
  m.pair_dim = 3;
  m.score_hidden = 4;
  return m;
}

}  // namespace fcds::model
