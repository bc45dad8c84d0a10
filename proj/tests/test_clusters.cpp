#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <queue>
#include <vector>

#include "perco/clusters.hpp"
#include "perco/rng.hpp"

using namespace perco;

namespace {

std::vector<std::uint32_t> all_vertices(std::int64_t n) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v)
    out[static_cast<std::size_t>(v)] = static_cast<std::uint32_t>(v);
  return out;
}

// plain BFS reference labeling
std::vector<int> bfs_components(const std::vector<Edge>& edges,
                                std::int64_t n) {
  std::vector<std::vector<std::int64_t>> adj(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (std::int64_t s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::queue<std::int64_t> q;
    q.push(s);
    comp[static_cast<std::size_t>(s)] = next;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (const auto w : adj[static_cast<std::size_t>(v)]) {
        if (comp[static_cast<std::size_t>(w)] >= 0) continue;
        comp[static_cast<std::size_t>(w)] = next;
        q.push(w);
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace

TEST_CASE("no edges means singleton clusters") {
  const auto lab = label_clusters({}, 5);
  CHECK(lab.vertex_count() == 5);
  for (std::uint32_t v = 0; v < 5; ++v) CHECK(lab.cluster_size(v) == 1);
  const auto hist = cluster_size_histogram(lab);
  REQUIRE(hist.size() == 1);
  CHECK(hist.at(1) == 5);
}

TEST_CASE("a path joins into one cluster") {
  const std::vector<Edge> edges = {make_edge(0, 1), make_edge(1, 2)};
  const auto lab = label_clusters(edges, 3);
  CHECK(lab.cluster_size(0) == 3);
  CHECK(lab.root(0) == lab.root(2));
  const auto hist = cluster_size_histogram(lab);
  CHECK(hist.at(3) == 1);
}

TEST_CASE("disjoint edges stay separate") {
  const std::vector<Edge> edges = {make_edge(0, 1), make_edge(2, 3)};
  const auto lab = label_clusters(edges, 4);
  CHECK(lab.cluster_size(0) == 2);
  CHECK(lab.cluster_size(2) == 2);
  CHECK(lab.root(0) != lab.root(2));
  CHECK(cluster_size_histogram(lab).at(2) == 2);
}

TEST_CASE("duplicate and cyclic edges are harmless") {
  const std::vector<Edge> edges = {make_edge(0, 1), make_edge(0, 1),
                                   make_edge(1, 2), make_edge(0, 2)};
  const auto lab = label_clusters(edges, 3);
  CHECK(lab.cluster_size(1) == 3);
}

TEST_CASE("labeling validates its input") {
  CHECK_THROWS_AS(label_clusters({}, -1), size_error);
  CHECK_THROWS_AS(label_clusters({make_edge(0, 5)}, 3), size_error);
}

TEST_CASE("labeling agrees with breadth-first search") {
  Rng rng(2718u);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::int64_t>(2 + rng.below(39));
    std::vector<Edge> edges;
    const auto m = rng.below(60);
    for (std::uint64_t i = 0; i < m; ++i) {
      const auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
      const auto v = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
      if (u != v) edges.push_back(make_edge(u, v));
    }
    const auto lab = label_clusters(edges, n);
    const auto comp = bfs_components(edges, n);
    for (std::int64_t a = 0; a < n; ++a)
      for (std::int64_t b = a + 1; b < n; ++b) {
        const bool same_ref = comp[static_cast<std::size_t>(a)] ==
                              comp[static_cast<std::size_t>(b)];
        const bool same_lab = lab.root(static_cast<std::uint32_t>(a)) ==
                              lab.root(static_cast<std::uint32_t>(b));
        REQUIRE(same_ref == same_lab);
      }
    // size field agrees with component tallies
    for (std::int64_t v = 0; v < n; ++v) {
      std::int64_t count = 0;
      for (std::int64_t w = 0; w < n; ++w)
        if (comp[static_cast<std::size_t>(w)] ==
            comp[static_cast<std::size_t>(v)])
          ++count;
      REQUIRE(lab.cluster_size(static_cast<std::uint32_t>(v)) == count);
    }
  }
}

TEST_CASE("largest intersection with a vertex set") {
  const std::vector<Edge> edges = {make_edge(0, 1), make_edge(1, 2)};
  const auto lab = label_clusters(edges, 5);
  CHECK(max_cluster_in(lab, {3}) == 1);
  CHECK(max_cluster_in(lab, {3, 4}) == 1);
  CHECK(max_cluster_in(lab, all_vertices(5)) == 3);
  CHECK(max_cluster_in(lab, {0, 1, 2}) == 3);
  CHECK(max_cluster_in(lab, {0, 3}) == 1);
  CHECK(max_cluster_in(lab, {}) == 0);
}

TEST_CASE("restricted second moment") {
  const std::vector<Edge> edges = {make_edge(0, 1), make_edge(1, 2)};
  const auto lab = label_clusters(edges, 4);
  CHECK(restricted_susceptibility(lab, {0, 1, 2, 3}) == 10);
  CHECK(restricted_susceptibility(lab, {0, 3}) == 2);
  CHECK(restricted_susceptibility(lab, {}) == 0);
}

TEST_CASE("cross moment between nested sets") {
  {
    const auto lab = label_clusters({}, 4);
    CHECK(cross_block_product(lab, {0, 1}, all_vertices(4)) == 2);
  }
  {
    const std::vector<Edge> edges = {make_edge(0, 1), make_edge(1, 2),
                                     make_edge(2, 3)};
    const auto lab = label_clusters(edges, 4);
    CHECK(cross_block_product(lab, {0, 1}, all_vertices(4)) == 8);
  }
  const auto lab = label_clusters({}, 4);
  CHECK_THROWS_AS(cross_block_product(lab, {0, 1}, {1, 2, 3}),
                  std::domain_error);
}

TEST_CASE("cross moment grows as edges are added") {
  Rng rng(31415u);
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t n = 12;
    std::vector<Edge> edges;
    std::int64_t prev = -1;
    const std::vector<std::uint32_t> small = {0, 1, 2, 3};
    for (int step = 0; step < 12; ++step) {
      const auto u = static_cast<std::int64_t>(rng.below(12));
      const auto v = static_cast<std::int64_t>(rng.below(12));
      if (u != v) edges.push_back(make_edge(u, v));
      const auto lab = label_clusters(edges, n);
      const auto cross = cross_block_product(lab, small, all_vertices(n));
      REQUIRE(cross >= prev);
      prev = cross;
    }
  }
}

TEST_CASE("connection counts around an origin") {
  const BoxGeometry box(1, 7);
  Pt origin = Pt::zero(1);
  origin[0] = 3;
  {
    const auto lab = label_clusters({}, box.vertex_count);
    const auto counts = origin_connection_counts(lab, box, origin, {0, 1, 2});
    CHECK(counts == std::vector<std::int64_t>{1, 1, 1});
  }
  {
    std::vector<Edge> chain;
    for (std::int64_t v = 0; v + 1 < box.vertex_count; ++v)
      chain.push_back(make_edge(v, v + 1));
    const auto lab = label_clusters(chain, box.vertex_count);
    const auto counts = origin_connection_counts(lab, box, origin, {1, 2, 3});
    CHECK(counts == std::vector<std::int64_t>{3, 5, 7});
  }
  {
    // cluster {2,3,6}: within radius 2 of the origin only 2 and 3 lie
    const std::vector<Edge> edges = {make_edge(2, 3), make_edge(3, 6)};
    const auto lab = label_clusters(edges, box.vertex_count);
    const auto counts = origin_connection_counts(lab, box, origin, {2});
    CHECK(counts == std::vector<std::int64_t>{2});
  }
  const auto lab = label_clusters({}, box.vertex_count);
  CHECK_THROWS_AS(origin_connection_counts(lab, box, origin, {4}),
                  std::domain_error);
  CHECK_THROWS_AS(origin_connection_counts(lab, box, origin, {-1}),
                  std::domain_error);
  Pt outside = Pt::zero(1);
  outside[0] = 9;
  CHECK_THROWS_AS(origin_connection_counts(lab, box, outside, {1}),
                  std::domain_error);
}

TEST_CASE("two-dimensional connection counts") {
  const BoxGeometry box(2, 5);
  Pt origin = Pt::zero(2);
  origin[0] = 2;
  origin[1] = 2;
  std::vector<Edge> all;
  for (std::int64_t u = 0; u < box.vertex_count; ++u)
    for (std::int64_t v = u + 1; v < box.vertex_count; ++v)
      all.push_back(make_edge(u, v));
  const auto lab = label_clusters(all, box.vertex_count);
  const auto counts = origin_connection_counts(lab, box, origin, {0, 1, 2});
  CHECK(counts == std::vector<std::int64_t>{1, 9, 25});
}

TEST_CASE("two large disjoint clusters flag the indicator") {
  {
    const auto lab = label_clusters({}, 2);
    CHECK(two_ghost_indicator(lab, 0, 1, 1));
  }
  {
    const std::vector<Edge> edges = {make_edge(0, 1)};
    const auto lab = label_clusters(edges, 2);
    CHECK_FALSE(two_ghost_indicator(lab, 0, 1, 1));
  }
  {
    // sizes 5 and 3: passes n=3, fails n=4
    std::vector<Edge> edges;
    for (std::int64_t v = 0; v < 4; ++v) edges.push_back(make_edge(v, v + 1));
    for (std::int64_t v = 5; v < 7; ++v) edges.push_back(make_edge(v, v + 1));
    const auto lab = label_clusters(edges, 8);
    CHECK(two_ghost_indicator(lab, 0, 6, 3));
    CHECK_FALSE(two_ghost_indicator(lab, 0, 6, 4));
  }
}

TEST_CASE("tail mass from the size histogram") {
  const std::vector<Edge> edges = {make_edge(0, 1), make_edge(1, 2)};
  const auto lab = label_clusters(edges, 4);
  const auto hist = cluster_size_histogram(lab);
  CHECK(cluster_tail_from_histogram(hist, 2, 4) == doctest::Approx(0.75));
  CHECK(cluster_tail_from_histogram(hist, 1, 4) == doctest::Approx(1.0));
  CHECK(cluster_tail_from_histogram(hist, 4, 4) == doctest::Approx(0.0));
  CHECK(cluster_tail_from_histogram(hist, 2, 0) == 0.0);
  const auto full = label_clusters(
      {make_edge(0, 1), make_edge(1, 2), make_edge(2, 3)}, 4);
  CHECK(cluster_tail_from_histogram(cluster_size_histogram(full), 4, 4) ==
        doctest::Approx(1.0));
}

TEST_CASE("vertices of a block inside a box") {
  const auto sg = SigmaDecomposition::zeros(2, 2, 2);
  const BoxGeometry box(2, 4);
  Pt p = Pt::zero(2);
  p[0] = 2;
  p[1] = 2;
  const Block b = block_of(sg, p, 1);
  const auto verts = block_vertices(sg, box, b);
  // row-major with the first coordinate fastest
  const std::vector<std::uint32_t> expected = {10, 11, 14, 15};
  CHECK(verts == expected);
  Pt far = Pt::zero(2);
  far[0] = -2;
  far[1] = 0;
  const Block outside = block_of(sg, far, 0);
  CHECK(block_vertices(sg, box, outside).empty());
  const auto other = SigmaDecomposition::random(2, 2, 2, 3u);
  CHECK_THROWS_AS(block_vertices(other, box, b), mismatch_error);
}

TEST_CASE("moment inequalities hold on random graphs") {
  Rng rng(1618u);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t n = 16;
    std::vector<Edge> edges;
    const auto m = rng.below(24);
    for (std::uint64_t i = 0; i < m; ++i) {
      const auto u = static_cast<std::int64_t>(rng.below(16));
      const auto v = static_cast<std::int64_t>(rng.below(16));
      if (u != v) edges.push_back(make_edge(u, v));
    }
    const auto lab = label_clusters(edges, n);
    std::vector<std::uint32_t> B;
    for (std::uint32_t v = 0; v < 16; ++v)
      if (rng.below(2)) B.push_back(v);
    if (B.empty()) continue;
    const auto mx = max_cluster_in(lab, B);
    const auto chi = restricted_susceptibility(lab, B);
    REQUIRE(chi >= mx * mx);
    REQUIRE(chi <= mx * static_cast<std::int64_t>(B.size()));
    const auto cross = cross_block_product(lab, B, all_vertices(n));
    REQUIRE(cross >= chi);
  }
}
