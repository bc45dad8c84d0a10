#include "perco/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "perco/stats.hpp"

namespace perco {

namespace {

constexpr std::uint64_t kSaltPlain = 0x706c61696eull;
constexpr std::uint64_t kSaltRemainder = 0x72656d61696eull;
constexpr std::uint64_t kSaltBlock = 0x626c6f636bull;

struct DisplacementClass {
  Pt z;
  std::int64_t pairs = 0;  // ordered base points x with x and x+z in the box
  double jval = 0.0;
  double p_open = 0.0;
};

double open_probability(double beta, double rate) {
  return -std::expm1(-beta * rate);
}

// Representatives z with lexicographically positive direction, |z_i| < side.
std::vector<DisplacementClass> displacement_classes(const ModelParams& pr,
                                                    const BoxGeometry& box,
                                                    const KernelFn& kernel) {
  std::vector<DisplacementClass> classes;
  Pt z = Pt::zero(box.d);
  for (int i = 0; i < box.d; ++i) z[i] = -(box.side - 1);
  const double floor_c = pr.c;
  for (;;) {
    if (lex_positive(z)) {
      DisplacementClass cl;
      cl.z = z;
      cl.pairs = 1;
      for (int i = 0; i < box.d; ++i)
        cl.pairs *= box.side - (z[i] < 0 ? -z[i] : z[i]);
      cl.jval = kernel(z);
      Pt neg = Pt::zero(box.d);
      for (int i = 0; i < box.d; ++i) neg[i] = -z[i];
      const double jneg = kernel(neg);
      if (std::abs(cl.jval - jneg) > 1e-9 * std::max(1.0, cl.jval))
        throw kernel_contract_error("kernel is not symmetric at " +
                                    to_string(z));
      const double lower =
          floor_c * std::pow(static_cast<double>(linf_norm(z)),
                             -(static_cast<double>(pr.d) + pr.alpha));
      if (cl.jval < lower * (1.0 - 1e-9))
        throw kernel_contract_error("kernel below the power-law floor at " +
                                    to_string(z));
      cl.p_open = open_probability(pr.beta, cl.jval);
      if (cl.pairs > 0 && cl.p_open > 0.0) classes.push_back(cl);
    }
    int i = 0;
    for (; i < box.d; ++i) {
      if (++z[i] <= box.side - 1) break;
      z[i] = -(box.side - 1);
    }
    if (i == box.d) break;
  }
  return classes;
}

// Decode the t-th base point of a displacement class into an edge.
Edge class_edge(const BoxGeometry& box, const Pt& z, std::int64_t t) {
  Pt x = Pt::zero(box.d);
  for (int i = 0; i < box.d; ++i) {
    const Coord lo = z[i] < 0 ? -z[i] : 0;
    const Coord w = box.side - (z[i] < 0 ? -z[i] : z[i]);
    x[i] = lo + t % w;
    t /= w;
  }
  Pt y = add(x, z);
  return make_edge(box.index(x), box.index(y));
}

// Draw k distinct uniform indices below n. The accepted sequence is a
// deterministic prefix of the stream, so counts k <= k' yield nested sets.
template <class Emit>
void place_distinct(Rng& rng, std::int64_t n, std::int64_t k, Emit&& emit) {
  std::unordered_set<std::int64_t> seen;
  seen.reserve(static_cast<std::size_t>(k) * 2);
  std::int64_t placed = 0;
  while (placed < k) {
    const auto t = static_cast<std::int64_t>(
        rng.below(static_cast<std::uint64_t>(n)));
    if (!seen.insert(t).second) continue;
    ++placed;
    emit(t);
  }
}

// Partial Fisher-Yates; used when the draw covers a large fraction of a
// moderate class. Also prefix-nested in k.
template <class Emit>
void place_shuffle(Rng& rng, std::int64_t n, std::int64_t k, Emit&& emit) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.below(
                           static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    emit(idx[static_cast<std::size_t>(i)]);
  }
}

// One displacement class of independent pairs at probability p; emit(t) is
// called once per open pair index t, interleaved with the draws so coupled
// runs stay stream-aligned.
template <class Emit>
void sample_class(Rng& rng, std::int64_t n, double p, const SamplerOptions& opts,
                  std::vector<std::string>* warnings, const char* what,
                  Emit&& emit) {
  if (n <= 0 || p <= 0.0) return;
  const double mean = static_cast<double>(n) * p;
  if (mean > opts.dense_mean_threshold) {
    if (warnings && warnings->size() < 16)
      warnings->push_back(std::string(what) +
                          ": dense class, per-pair Bernoulli fallback");
    for (std::int64_t t = 0; t < n; ++t)
      if (rng.uniform01() < p) emit(t);
    return;
  }
  const std::int64_t k =
      stats::sample_binomial(n, p, rng, opts.mode == SampleMode::Coupled);
  if (k <= 0) return;
  if (opts.mode == SampleMode::Standard && k >= n / 8 && n <= (1 << 20))
    place_shuffle(rng, n, k, emit);
  else
    place_distinct(rng, n, k, emit);
}

struct BlockGrid {
  Block block;       // the untruncated block
  Pt lo;             // corner of the intersection with the box
  std::array<Coord, kMaxDim> w{};  // widths of the intersection
  std::int64_t volume = 1;
  bool truncated = false;
};

// Blocks of the given level intersecting the box, in deterministic order.
std::vector<BlockGrid> level_blocks(const SigmaDecomposition& sg,
                                    const BoxGeometry& box, int level) {
  const Coord w = sg.pow_L(level);
  std::vector<Coord> lo(static_cast<std::size_t>(box.d)),
      hi(static_cast<std::size_t>(box.d));
  for (int i = 0; i < box.d; ++i) {
    const Coord a = sg.anchor(level, i);
    lo[static_cast<std::size_t>(i)] = floor_div(0 - a, w);
    hi[static_cast<std::size_t>(i)] = floor_div(box.side - 1 - a, w);
  }
  std::vector<BlockGrid> out;
  Pt k = Pt::zero(box.d);
  for (int i = 0; i < box.d; ++i) k[i] = lo[static_cast<std::size_t>(i)];
  for (;;) {
    BlockGrid g;
    g.block.level = level;
    g.block.corner = Pt::zero(box.d);
    g.block.sigma_id = sg.digest();
    g.lo = Pt::zero(box.d);
    g.volume = 1;
    for (int i = 0; i < box.d; ++i) {
      g.block.corner[i] = sg.anchor(level, i) + k[i] * w;
      const Coord a = std::max<Coord>(g.block.corner[i], 0);
      const Coord b = std::min<Coord>(g.block.corner[i] + w - 1, box.side - 1);
      g.lo[i] = a;
      g.w[static_cast<std::size_t>(i)] = b - a + 1;
      g.volume *= b - a + 1;
      if (b - a + 1 != w) g.truncated = true;
    }
    out.push_back(g);
    int i = 0;
    for (; i < box.d; ++i) {
      if (++k[i] <= hi[static_cast<std::size_t>(i)]) break;
      k[i] = lo[static_cast<std::size_t>(i)];
    }
    if (i == box.d) break;
  }
  return out;
}

Pt grid_vertex(const BlockGrid& g, int d, std::int64_t t) {
  Pt p = Pt::zero(d);
  for (int i = 0; i < d; ++i) {
    p[i] = g.lo[i] + t % g.w[static_cast<std::size_t>(i)];
    t /= g.w[static_cast<std::size_t>(i)];
  }
  return p;
}

std::uint64_t block_salt(const Block& b, int d) {
  std::uint64_t h = mix_key(kSaltBlock, static_cast<std::uint64_t>(b.level));
  for (int i = 0; i < d; ++i)
    h = mix_key(h, static_cast<std::uint64_t>(b.corner[i]));
  return h;
}

// Cross-child pair machinery for one block layer: pairs inside the block
// that join exactly at its level are those not sharing a child.
struct CrossPairs {
  std::vector<BlockGrid> kids;          // child intersections with the box
  std::vector<std::int64_t> cum;        // cumulative W_a*W_b over child pairs
  std::vector<std::pair<int, int>> ab;  // child pair per cum entry
  std::int64_t total = 0;
};

CrossPairs cross_pairs(const SigmaDecomposition& sg, const BoxGeometry& box,
                       const BlockGrid& g) {
  CrossPairs cp;
  const Coord cw = sg.pow_L(g.block.level - 1);
  Pt delta = Pt::zero(box.d);
  for (;;) {
    BlockGrid kid;
    kid.block.level = g.block.level - 1;
    kid.block.corner = g.block.corner;
    kid.block.sigma_id = g.block.sigma_id;
    kid.lo = Pt::zero(box.d);
    kid.volume = 1;
    for (int i = 0; i < box.d; ++i) {
      kid.block.corner[i] += delta[i] * cw;
      const Coord a = std::max<Coord>(kid.block.corner[i], 0);
      const Coord b =
          std::min<Coord>(kid.block.corner[i] + cw - 1, box.side - 1);
      kid.lo[i] = a;
      const Coord width = b >= a ? b - a + 1 : 0;
      kid.w[static_cast<std::size_t>(i)] = width;
      kid.volume *= width;
    }
    if (kid.volume > 0) cp.kids.push_back(kid);
    int i = 0;
    for (; i < box.d; ++i) {
      if (++delta[i] < sg.L) break;
      delta[i] = 0;
    }
    if (i == box.d) break;
  }
  for (std::size_t a = 0; a < cp.kids.size(); ++a)
    for (std::size_t b = a + 1; b < cp.kids.size(); ++b) {
      cp.total += cp.kids[a].volume * cp.kids[b].volume;
      cp.cum.push_back(cp.total);
      cp.ab.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  return cp;
}

Edge cross_pair_edge(const CrossPairs& cp, const BoxGeometry& box,
                     std::int64_t t) {
  const auto it = std::upper_bound(cp.cum.begin(), cp.cum.end(), t);
  const auto pi = static_cast<std::size_t>(it - cp.cum.begin());
  const std::int64_t base = pi == 0 ? 0 : cp.cum[pi - 1];
  std::int64_t r = t - base;
  const auto& ka = cp.kids[static_cast<std::size_t>(cp.ab[pi].first)];
  const auto& kb = cp.kids[static_cast<std::size_t>(cp.ab[pi].second)];
  const std::int64_t ta = r % ka.volume;
  const std::int64_t tb = r / ka.volume;
  const Pt x = grid_vertex(ka, box.d, ta);
  const Pt y = grid_vertex(kb, box.d, tb);
  return make_edge(box.index(x), box.index(y));
}

void sample_block_layers(const ModelParams& pr, const SigmaDecomposition& sg,
                         const BoxGeometry& box, int max_level,
                         RandomSource src, const SamplerOptions& opts,
                         EdgeConfiguration& cfg) {
  for (int level = 1; level <= max_level; ++level) {
    const double rate =
        pr.c * std::pow(static_cast<double>(sg.L),
                        -(static_cast<double>(pr.d) + pr.alpha) *
                            static_cast<double>(level));
    const double p = open_probability(pr.beta, rate);
    for (const auto& g : level_blocks(sg, box, level)) {
      if (g.truncated) cfg.truncated_blocks = true;
      if (g.volume < 2) continue;
      Layer layer;
      layer.kind = LayerKind::Block;
      layer.block = g.block;
      if (p > 0.0) {
        const CrossPairs cp = cross_pairs(sg, box, g);
        if (cp.total > 0) {
          Rng rng(src, block_salt(g.block, box.d));
          sample_class(rng, cp.total, p, opts, &cfg.warnings, "block layer",
                       [&](std::int64_t t) {
                         layer.edges.push_back(cross_pair_edge(cp, box, t));
                       });
        }
      }
      cfg.layers.push_back(std::move(layer));
    }
  }
}

}  // namespace

EdgeConfiguration sample_plain(const ModelParams& pr, const BoxGeometry& box,
                               RandomSource src, const SamplerOptions& opts) {
  pr.validate();
  EdgeConfiguration cfg;
  cfg.box = box;
  cfg.max_level = 0;
  const KernelFn kernel = opts.kernel ? opts.kernel : power_law_kernel(pr);
  Layer layer;
  layer.kind = LayerKind::Plain;
  const auto classes = displacement_classes(pr, box, kernel);
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const auto& cl = classes[ci];
    Rng rng(src, mix_key(kSaltPlain, static_cast<std::uint64_t>(ci)));
    sample_class(rng, cl.pairs, cl.p_open, opts, &cfg.warnings, "plain class",
                 [&](std::int64_t t) {
                   layer.edges.push_back(class_edge(box, cl.z, t));
                 });
  }
  cfg.layers.push_back(std::move(layer));
  return cfg;
}

EdgeConfiguration sample_layered(const ModelParams& pr,
                                 const SigmaDecomposition& sg,
                                 const BoxGeometry& box, int max_level,
                                 RandomSource src, const SamplerOptions& opts) {
  pr.validate();
  if (sg.d != box.d) throw mismatch_error("sample_layered: dimension mismatch");
  if (pr.L != sg.L) throw mismatch_error("sample_layered: params.L != sigma.L");
  if (max_level < 0 || max_level > sg.depth)
    throw depth_error("sample_layered: max_level beyond sigma depth");
  if (box.side > sg.pow_L(max_level))
    throw config_error("sample_layered: box side exceeds L^max_level");

  EdgeConfiguration cfg;
  cfg.box = box;
  cfg.sigma_digest = sg.digest();
  cfg.max_level = max_level;
  const KernelFn kernel = opts.kernel ? opts.kernel : power_law_kernel(pr);

  // Exact level rates; joining levels above max_level stay in the remainder.
  std::vector<double> hpow(static_cast<std::size_t>(max_level) + 1, 0.0);
  for (int n = 1; n <= max_level; ++n)
    hpow[static_cast<std::size_t>(n)] =
        pr.c * std::pow(static_cast<double>(sg.L),
                        -(static_cast<double>(pr.d) + pr.alpha) *
                            static_cast<double>(n));

  Layer rem;
  rem.kind = LayerKind::Remainder;
  const auto classes = displacement_classes(pr, box, kernel);
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const auto& cl = classes[ci];
    Rng rng(src, mix_key(kSaltRemainder, static_cast<std::uint64_t>(ci)));
    // Candidates from the dominating kernel J, thinned down to the remainder
    // rate pair by pair; the thinning draw follows each accepted candidate so
    // streams align across beta in coupled mode.
    sample_class(
        rng, cl.pairs, cl.p_open, opts, &cfg.warnings, "remainder class",
        [&](std::int64_t t) {
          const Edge e = class_edge(box, cl.z, t);
          const double u = rng.uniform01();
          const Pt x = box.point(e.u), y = box.point(e.v);
          const int h = hierarchy_level(sg, x, y);
          const double hval =
              (h >= 1 && h <= max_level) ? hpow[static_cast<std::size_t>(h)] : 0.0;
          const double r = cl.jval - hval;
          if (r < -1e-9 * std::max(1.0, cl.jval))
            throw kernel_contract_error("sample_layered: J - H negative");
          if (r <= 0.0) return;
          const double keep =
              -std::expm1(-pr.beta * r) / -std::expm1(-pr.beta * cl.jval);
          if (u < keep) rem.edges.push_back(e);
        });
  }
  cfg.layers.push_back(std::move(rem));
  sample_block_layers(pr, sg, box, max_level, src, opts, cfg);
  return cfg;
}

EdgeConfiguration sample_hierarchical(const ModelParams& pr,
                                      const SigmaDecomposition& sg,
                                      const BoxGeometry& box, int max_level,
                                      RandomSource src,
                                      const SamplerOptions& opts) {
  pr.validate();
  if (sg.d != box.d)
    throw mismatch_error("sample_hierarchical: dimension mismatch");
  if (pr.L != sg.L)
    throw mismatch_error("sample_hierarchical: params.L != sigma.L");
  if (max_level < 0 || max_level > sg.depth)
    throw depth_error("sample_hierarchical: max_level beyond sigma depth");
  EdgeConfiguration cfg;
  cfg.box = box;
  cfg.sigma_digest = sg.digest();
  cfg.max_level = max_level;
  sample_block_layers(pr, sg, box, max_level, src, opts, cfg);
  return cfg;
}

std::vector<Edge> restrict_to_eta(const EdgeConfiguration& cfg,
                                  const SigmaDecomposition& sg,
                                  const Block& b) {
  if (cfg.sigma_digest == 0)
    throw mismatch_error("restrict_to_eta: configuration has no layers");
  if (cfg.sigma_digest != sg.digest() || b.sigma_id != sg.digest())
    throw mismatch_error("restrict_to_eta: sigma mismatch");
  std::vector<Edge> out;
  for (const auto& layer : cfg.layers) {
    if (layer.kind == LayerKind::Block &&
        is_strict_ancestor(sg, layer.block, b))
      continue;
    out.insert(out.end(), layer.edges.begin(), layer.edges.end());
  }
  return out;
}

void dump_configuration(std::ostream& os, const EdgeConfiguration& cfg,
                        const std::vector<std::string>& header_lines) {
  for (const auto& h : header_lines) os << "# " << h << "\n";
  for (const auto& layer : cfg.layers) {
    std::string tag;
    switch (layer.kind) {
      case LayerKind::Plain:
        tag = "P";
        break;
      case LayerKind::Remainder:
        tag = "R";
        break;
      case LayerKind::Block: {
        tag = "B" + std::to_string(layer.block.level);
        for (int i = 0; i < layer.block.corner.d; ++i)
          tag += (i ? "," : ":") + std::to_string(layer.block.corner[i]);
        break;
      }
    }
    for (const auto& e : layer.edges)
      os << tag << " " << e.u << " " << e.v << "\n";
  }
}

}  // namespace perco
