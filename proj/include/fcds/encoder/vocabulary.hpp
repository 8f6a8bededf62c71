#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fcds/corpus/types.hpp"

namespace fcds::encoder {

// Token -> id. Ids 0..2 are reserved for padding, unknown and the mention
// marker; the marker is never looked up by text, so a literal "*" in the
// corpus gets its own ordinary id.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;
  static constexpr std::size_t kMarker = 2;
  static constexpr const char* kMarkerSymbol = "*";

  Vocabulary() = default;

  static Vocabulary build(const std::vector<corpus::AnnotatedDocument>& train, std::size_t min_count = 1) {
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> order;
    for (const auto& d : train)
      for (const auto& s : d.sentences)
        for (const auto& t : s)
          if (counts[t.surface]++ == 0) order.push_back(t.surface);
    Vocabulary v;
    for (const auto& w : order)
      if (counts[w] >= min_count) v.add(w);
    return v;
  }

  std::size_t id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknown : it->second;
  }
  std::size_t size() const { return kReserved + words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  // One word per line, in id order after the reserved ids.
  std::string serialize() const {
    std::string out;
    for (const auto& w : words_) out += w + '\n';
    return out;
  }
  static Vocabulary deserialize(const std::string& text) {
    Vocabulary v;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) v.add(line);
    return v;
  }

 private:
  static constexpr std::size_t kReserved = 3;
  void add(const std::string& w) {
    if (ids_.count(w)) return;
    ids_[w] = kReserved + words_.size();
    words_.push_back(w);
  }
  std::map<std::string, std::size_t> ids_;
  std::vector<std::string> words_;
};

}  // namespace fcds::encoder
