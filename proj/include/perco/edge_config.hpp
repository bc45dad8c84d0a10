#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "perco/box.hpp"
#include "perco/sigma.hpp"

namespace perco {

struct Edge {
  std::int64_t u = 0, v = 0;  // box indices, u < v

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.u == b.u && a.v == b.v;
  }
  friend bool operator<(const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  }
};

inline Edge make_edge(std::int64_t a, std::int64_t b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

enum class LayerKind { Plain, Remainder, Block };

struct Layer {
  LayerKind kind = LayerKind::Plain;
  Block block;  // meaningful only for LayerKind::Block
  std::vector<Edge> edges;
};

// One sampled percolation configuration, kept split by layer so that
// cluster-of-a-block restrictions can drop ancestor layers afterwards.
struct EdgeConfiguration {
  BoxGeometry box;
  std::uint64_t sigma_digest = 0;  // 0 for plain configurations
  int max_level = 0;
  std::vector<Layer> layers;
  bool truncated_blocks = false;  // some block layer straddled the boundary
  std::vector<std::string> warnings;

  // Set union: the same pair can be open in several layers at once.
  std::vector<Edge> union_edges() const {
    std::vector<Edge> all;
    std::size_t n = 0;
    for (const auto& l : layers) n += l.edges.size();
    all.reserve(n);
    for (const auto& l : layers)
      all.insert(all.end(), l.edges.begin(), l.edges.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }

  std::int64_t edge_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += static_cast<std::int64_t>(l.edges.size());
    return n;
  }
};

// Line-oriented dump: "# key value" header lines, then "tag u v" per edge.
void dump_configuration(std::ostream& os, const EdgeConfiguration& cfg,
                        const std::vector<std::string>& header_lines);

}  // namespace perco
