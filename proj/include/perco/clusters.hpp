#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "perco/box.hpp"
#include "perco/edge_config.hpp"
#include "perco/errors.hpp"
#include "perco/sigma.hpp"

namespace perco {

// Disjoint-set forest flattened after construction: parent[v] is the root of
// v's cluster and size[root] its cardinality. Immutable once built.
struct ClusterLabeling {
  std::vector<std::uint32_t> parent;
  std::vector<std::int64_t> size;

  std::uint32_t root(std::uint32_t v) const { return parent[v]; }
  std::int64_t cluster_size(std::uint32_t v) const { return size[parent[v]]; }
  std::int64_t vertex_count() const {
    return static_cast<std::int64_t>(parent.size());
  }
};

ClusterLabeling label_clusters(const std::vector<Edge>& edges,
                               std::int64_t vertex_count);

// Vertex indices of block ∩ box, sorted.
std::vector<std::uint32_t> block_vertices(const SigmaDecomposition& sg,
                                          const BoxGeometry& box,
                                          const Block& b);

// max over clusters K of |K ∩ B|; clusters may extend outside B.
std::int64_t max_cluster_in(const ClusterLabeling& lab,
                            const std::vector<std::uint32_t>& B);

// Σ over clusters C of |C ∩ B|².
std::int64_t restricted_susceptibility(const ClusterLabeling& lab,
                                       const std::vector<std::uint32_t>& B);

// Σ over clusters C of |C ∩ B_small| · |C ∩ B_big|; requires B_small ⊆ B_big.
std::int64_t cross_block_product(const ClusterLabeling& lab,
                                 const std::vector<std::uint32_t>& B_small,
                                 const std::vector<std::uint32_t>& B_big);

// For each radius r, the number of x in origin + [-r, r]^d connected to the
// origin (the origin itself counts). The ball must fit inside the box.
std::vector<std::int64_t> origin_connection_counts(
    const ClusterLabeling& lab, const BoxGeometry& box, const Pt& origin,
    const std::vector<int>& radii);

// True iff origin and x lie in distinct clusters both of size ≥ n.
bool two_ghost_indicator(const ClusterLabeling& lab, std::uint32_t origin,
                         std::uint32_t x, std::int64_t n);

std::map<std::int64_t, std::int64_t> cluster_size_histogram(
    const ClusterLabeling& lab);

// Size-biased tail P(|K| ≥ n) = Σ_{s ≥ n} s·count(s) / V.
double cluster_tail_from_histogram(
    const std::map<std::int64_t, std::int64_t>& hist, std::int64_t n,
    std::int64_t vertex_count);

}  // namespace perco
