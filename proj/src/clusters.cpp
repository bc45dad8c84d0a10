#include "perco/clusters.hpp"

#include <algorithm>
#include <unordered_map>

namespace perco {

namespace {

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t v) {
  std::uint32_t r = v;
  while (parent[r] != r) r = parent[r];
  while (parent[v] != r) {
    const std::uint32_t next = parent[v];
    parent[v] = r;
    v = next;
  }
  return r;
}

// Per-root intersection counts with B.
std::unordered_map<std::uint32_t, std::int64_t> root_counts(
    const ClusterLabeling& lab, const std::vector<std::uint32_t>& B) {
  std::unordered_map<std::uint32_t, std::int64_t> counts;
  counts.reserve(B.size());
  for (const auto v : B) ++counts[lab.root(v)];
  return counts;
}

}  // namespace

ClusterLabeling label_clusters(const std::vector<Edge>& edges,
                               std::int64_t vertex_count) {
  if (vertex_count < 0 || vertex_count > (std::int64_t{1} << 32))
    throw size_error("label_clusters: bad vertex count");
  const auto n = static_cast<std::size_t>(vertex_count);
  ClusterLabeling lab;
  lab.parent.resize(n);
  for (std::size_t v = 0; v < n; ++v)
    lab.parent[v] = static_cast<std::uint32_t>(v);
  std::vector<std::int64_t> sz(n, 1);
  for (const auto& e : edges) {
    if (e.u >= vertex_count || e.v >= vertex_count)
      throw size_error("label_clusters: edge endpoint out of range");
    auto a = find_root(lab.parent, static_cast<std::uint32_t>(e.u));
    auto b = find_root(lab.parent, static_cast<std::uint32_t>(e.v));
    if (a == b) continue;
    if (sz[a] < sz[b]) std::swap(a, b);
    lab.parent[b] = a;
    sz[a] += sz[b];
  }
  for (std::size_t v = 0; v < n; ++v)
    lab.parent[v] = find_root(lab.parent, static_cast<std::uint32_t>(v));
  lab.size = std::move(sz);
  return lab;
}

std::vector<std::uint32_t> block_vertices(const SigmaDecomposition& sg,
                                          const BoxGeometry& box,
                                          const Block& b) {
  if (b.sigma_id != sg.digest())
    throw mismatch_error("block_vertices: sigma mismatch");
  const Coord w = sg.pow_L(b.level);
  Pt lo = Pt::zero(box.d);
  std::array<Coord, kMaxDim> width{};
  std::int64_t volume = 1;
  for (int i = 0; i < box.d; ++i) {
    const Coord a = std::max<Coord>(b.corner[i], 0);
    const Coord bb = std::min<Coord>(b.corner[i] + w - 1, box.side - 1);
    if (bb < a) return {};
    lo[i] = a;
    width[static_cast<std::size_t>(i)] = bb - a + 1;
    volume *= bb - a + 1;
  }
  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(volume));
  Pt p = lo;
  for (;;) {
    out.push_back(static_cast<std::uint32_t>(box.index(p)));
    int i = 0;
    for (; i < box.d; ++i) {
      if (++p[i] < lo[i] + width[static_cast<std::size_t>(i)]) break;
      p[i] = lo[i];
    }
    if (i == box.d) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t max_cluster_in(const ClusterLabeling& lab,
                            const std::vector<std::uint32_t>& B) {
  std::int64_t best = 0;
  for (const auto& [root, count] : root_counts(lab, B))
    best = std::max(best, count);
  return best;
}

std::int64_t restricted_susceptibility(const ClusterLabeling& lab,
                                       const std::vector<std::uint32_t>& B) {
  std::int64_t total = 0;
  for (const auto& [root, count] : root_counts(lab, B))
    total += count * count;
  return total;
}

std::int64_t cross_block_product(const ClusterLabeling& lab,
                                 const std::vector<std::uint32_t>& B_small,
                                 const std::vector<std::uint32_t>& B_big) {
  std::vector<std::uint32_t> small_sorted = B_small;
  std::vector<std::uint32_t> big_sorted = B_big;
  std::sort(small_sorted.begin(), small_sorted.end());
  std::sort(big_sorted.begin(), big_sorted.end());
  if (!std::includes(big_sorted.begin(), big_sorted.end(),
                     small_sorted.begin(), small_sorted.end()))
    throw std::domain_error("cross_block_product: B_small not inside B_big");
  const auto small_counts = root_counts(lab, B_small);
  const auto big_counts = root_counts(lab, B_big);
  std::int64_t total = 0;
  for (const auto& [root, count] : small_counts) {
    const auto it = big_counts.find(root);
    if (it != big_counts.end()) total += count * it->second;
  }
  return total;
}

std::vector<std::int64_t> origin_connection_counts(
    const ClusterLabeling& lab, const BoxGeometry& box, const Pt& origin,
    const std::vector<int>& radii) {
  if (!box.contains(origin))
    throw std::domain_error("origin_connection_counts: origin outside box");
  std::vector<std::int64_t> out;
  out.reserve(radii.size());
  const auto origin_root = lab.root(static_cast<std::uint32_t>(box.index(origin)));
  for (const int r : radii) {
    if (r < 0) throw std::domain_error("origin_connection_counts: negative radius");
    for (int i = 0; i < box.d; ++i)
      if (origin[i] - r < 0 || origin[i] + r > box.side - 1)
        throw std::domain_error("origin_connection_counts: ball leaves the box");
    Pt p = origin;
    for (int i = 0; i < box.d; ++i) p[i] = origin[i] - r;
    std::int64_t count = 0;
    for (;;) {
      if (lab.root(static_cast<std::uint32_t>(box.index(p))) == origin_root)
        ++count;
      int i = 0;
      for (; i < box.d; ++i) {
        if (++p[i] <= origin[i] + r) break;
        p[i] = origin[i] - r;
      }
      if (i == box.d) break;
    }
    out.push_back(count);
  }
  return out;
}

bool two_ghost_indicator(const ClusterLabeling& lab, std::uint32_t origin,
                         std::uint32_t x, std::int64_t n) {
  const auto a = lab.root(origin);
  const auto b = lab.root(x);
  return a != b && lab.size[a] >= n && lab.size[b] >= n;
}

std::map<std::int64_t, std::int64_t> cluster_size_histogram(
    const ClusterLabeling& lab) {
  std::map<std::int64_t, std::int64_t> hist;
  for (std::size_t v = 0; v < lab.parent.size(); ++v)
    if (lab.parent[v] == v) ++hist[lab.size[v]];
  return hist;
}

double cluster_tail_from_histogram(
    const std::map<std::int64_t, std::int64_t>& hist, std::int64_t n,
    std::int64_t vertex_count) {
  if (vertex_count <= 0) return 0.0;
  std::int64_t mass = 0;
  for (auto it = hist.lower_bound(n); it != hist.end(); ++it)
    mass += it->first * it->second;
  return static_cast<double>(mass) / static_cast<double>(vertex_count);
}

}  // namespace perco
