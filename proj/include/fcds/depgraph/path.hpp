#pragma once

#include <deque>
#include <limits>
#include <vector>

#include "fcds/depgraph/graph.hpp"

namespace fcds::depgraph {

inline constexpr std::size_t kPathRows = 14;
inline constexpr std::size_t kPathInterior = kPathRows - 2;
inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

// Hop distances from the nearest of `sources`, over the undirected view.
inline std::vector<std::size_t> bfs_distances(const GraphSkeleton& g, const std::vector<std::size_t>& sources) {
  std::vector<std::size_t> dist(g.size(), kUnreachable);
  std::deque<std::size_t> queue;
  for (auto s : sources)
    if (dist[s] != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : g.neighbors[u])
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

struct NodePath {
  std::vector<std::size_t> nodes;  // mention node of e_s ... mention node of e_o
  bool connected = false;

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

// Fewest-hop path between the closest pair of mention nodes of the two
// entities. Among equally short paths the lexicographically smallest node
// sequence wins: distances to the target set are computed once, then the
// walk starts at the smallest source on a shortest path and always steps to
// the smallest neighbor one hop closer.
inline NodePath shortest_node_path(const GraphSkeleton& g, std::size_t entity_s, std::size_t entity_o) {
  const auto& sources = g.entity_mention_nodes.at(entity_s);
  const auto& targets = g.entity_mention_nodes.at(entity_o);
  const auto to_target = bfs_distances(g, targets);
  std::size_t best = kUnreachable, start = 0;
  for (auto s : sources)
    if (to_target[s] < best || (to_target[s] == best && s < start)) {
      best = to_target[s];
      start = s;
    }
  NodePath path;
  if (best == kUnreachable) return path;
  path.connected = true;
  path.nodes.push_back(start);
  std::size_t cur = start;
  while (to_target[cur] != 0) {
    for (auto v : g.neighbors[cur])
      if (to_target[v] + 1 == to_target[cur]) {
        cur = v;
        break;
      }
    path.nodes.push_back(cur);
  }
  return path;
}

// Rows [e_s, interior..., e_o] over post-GCN features, keeping the first 12
// interior nodes and zero-padding to exactly 14 rows. A disconnected pair
// gives [e_s, e_o] and zeros.
inline Tensor path_feature(const Tensor& features, const NodePath& path, const Tensor& e_s, const Tensor& e_o) {
  std::vector<Tensor> parts{num::reshape(e_s, {1, e_s.numel()})};
  if (path.nodes.size() > 2) {
    const auto interior_end = std::min(path.nodes.size() - 1, 1 + kPathInterior);
    std::vector<std::size_t> interior(path.nodes.begin() + 1, path.nodes.begin() + static_cast<std::ptrdiff_t>(interior_end));
    parts.push_back(num::gather(features, interior));
  }
  parts.push_back(num::reshape(e_o, {1, e_o.numel()}));
  return num::zero_pad_to(num::concat(parts, 0), kPathRows);
}

}  // namespace fcds::depgraph
