#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fcds/corpus/types.hpp"
#include "fcds/depgraph/graph.hpp"
#include "fcds/depgraph/path.hpp"

namespace fcds::depgraph {

struct DistanceStats {
  double avg = 0, std = 0;
  std::size_t max = 0, min = 0;
  std::size_t pairs = 0;         // connected entity pairs measured
  std::size_t disconnected = 0;  // pairs with no path, excluded
};

// Hop distance between the nearest mention nodes of every unordered entity
// pair, per document.
inline std::vector<std::size_t> pair_distances(const corpus::AnnotatedDocument& doc, bool with_document_node,
                                               std::size_t* disconnected = nullptr) {
  const auto g = build_skeleton(doc, with_document_node);
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < doc.entities.size(); ++s) {
    const auto dist = bfs_distances(g, g.entity_mention_nodes[s]);
    for (std::size_t o = s + 1; o < doc.entities.size(); ++o) {
      std::size_t best = kUnreachable;
      for (auto m : g.entity_mention_nodes[o]) best = std::min(best, dist[m]);
      if (best == kUnreachable) {
        if (disconnected) ++*disconnected;
        continue;
      }
      out.push_back(best);
    }
  }
  return out;
}

// Population standard deviation.
inline DistanceStats graph_distance_stats(const std::vector<corpus::AnnotatedDocument>& docs, bool with_document_node) {
  DistanceStats st;
  std::vector<std::size_t> all;
  for (const auto& d : docs) {
    auto ds = pair_distances(d, with_document_node, &st.disconnected);
    all.insert(all.end(), ds.begin(), ds.end());
  }
  st.pairs = all.size();
  if (all.empty()) return st;
  double sum = 0;
  for (auto v : all) sum += static_cast<double>(v);
  st.avg = sum / static_cast<double>(all.size());
  double var = 0;
  for (auto v : all) var += (static_cast<double>(v) - st.avg) * (static_cast<double>(v) - st.avg);
  st.std = std::sqrt(var / static_cast<double>(all.size()));
  st.max = *std::max_element(all.begin(), all.end());
  st.min = *std::min_element(all.begin(), all.end());
  return st;
}

}  // namespace fcds::depgraph
