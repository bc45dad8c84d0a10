#include "perco/observables.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "perco/ensemble.hpp"
#include "perco/stats.hpp"

namespace perco {

namespace {

constexpr double kInvE = 0.36787944117144233;
// One-sided normal quantile at 0.999.
constexpr double kZ999 = 3.090232306167813;

std::int64_t count_ge(const std::vector<std::int64_t>& sorted, double thr) {
  const auto it = std::lower_bound(
      sorted.begin(), sorted.end(), thr,
      [](std::int64_t a, double b) { return static_cast<double>(a) < b; });
  return static_cast<std::int64_t>(sorted.end() - it);
}

stats::MeanErr mean_and_se(const std::vector<std::int64_t>& xs) {
  const auto n = static_cast<double>(xs.size());
  stats::KahanSum sum;
  for (const auto x : xs) sum.add(static_cast<double>(x));
  const double mean = sum.value() / n;
  stats::KahanSum sq;
  for (const auto x : xs) {
    const double d = static_cast<double>(x) - mean;
    sq.add(d * d);
  }
  const double var = xs.size() > 1 ? sq.value() / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

MEstimate estimate_M(const std::vector<std::int64_t>& samples) {
  if (samples.size() < 100)
    throw insufficient_samples_error("estimate_M: needs at least 100 samples");
  std::vector<std::int64_t> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const auto R = static_cast<std::int64_t>(sorted.size());
  const std::int64_t top = sorted.back();
  MEstimate est;
  est.m = -1;
  // The tail beyond the largest sample is 0, so the scan always lands.
  for (std::int64_t m = 1; m <= top + 1; ++m) {
    const std::int64_t k = count_ge(sorted, static_cast<double>(m));
    if (static_cast<double>(k) / static_cast<double>(R) <= kInvE) {
      est.m = static_cast<int>(m);
      break;
    }
  }
  est.m = std::max(est.m, 2);
  est.tail_at_m =
      static_cast<double>(count_ge(sorted, static_cast<double>(est.m))) /
      static_cast<double>(R);
  int lo = 0, hi = 0;
  std::int64_t prev_k = R;  // P(X ≥ 1)·R; X ≥ 1 may fail but P(X ≥ 0) = 1
  for (std::int64_t m = 1; m <= top + 1; ++m) {
    const std::int64_t k = count_ge(sorted, static_cast<double>(m));
    const bool cross_here =
        stats::clopper_pearson(k, R, 0.95).lo <= kInvE &&
        (m == 1 || stats::clopper_pearson(prev_k, R, 0.95).hi > kInvE);
    if (cross_here) {
      if (lo == 0) lo = static_cast<int>(m);
      hi = static_cast<int>(m);
    }
    prev_k = k;
  }
  est.band_lo = std::max(lo == 0 ? est.m : lo, 2);
  est.band_hi = std::max(hi == 0 ? est.m : hi, 2);
  return est;
}

GoodnessReport classify_good(const std::vector<BlockEnsemble>& siblings,
                             const ModelParams& pr) {
  pr.validate();
  std::int64_t family = 1;
  for (int i = 0; i < pr.d; ++i) family *= pr.L;
  if (static_cast<std::int64_t>(siblings.size()) != family)
    throw std::domain_error("classify_good: expected the full sibling family");
  const auto R = siblings.front().replicates();
  for (const auto& s : siblings) {
    if (s.replicates() != R || s.block.level != siblings.front().block.level ||
        s.block.sigma_id != siblings.front().block.sigma_id)
      throw std::domain_error("classify_good: inconsistent sibling ensembles");
  }
  GoodnessReport report;
  for (const auto& s : siblings) {
    GoodnessEntry e;
    e.block = s.block;
    const auto mk = mean_and_se(s.kmax);
    const auto ms = mean_and_se(s.susc);
    e.mean_kmax = mk.mean;
    e.se_kmax = mk.se;
    e.mean_susc = ms.mean;
    e.se_susc = ms.se;
    report.entries.push_back(e);
  }
  // a ≤ b, with exact ties and statistical dead heats counting as ≤.
  const auto leq = [](double a, double ea, double b, double eb) {
    const double slack = std::max(2.0 * std::hypot(ea, eb),
                                  1e-9 * std::max({1.0, std::abs(a), std::abs(b)}));
    return a <= b + slack;
  };
  const int need = static_cast<int>(family / 2) - 1;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    auto& e = report.entries[i];
    for (std::size_t j = 0; j < report.entries.size(); ++j) {
      if (i == j) continue;
      const auto& o = report.entries[j];
      if (leq(e.mean_kmax, e.se_kmax, o.mean_kmax, o.se_kmax)) ++e.kmax_leq;
      if (leq(e.mean_susc, e.se_susc, o.mean_susc, o.se_susc)) ++e.susc_leq;
    }
    e.good = e.kmax_leq >= need && e.susc_leq >= 1;
    if (e.good) ++report.good_count;
  }
  return report;
}

std::vector<TEstimate> estimate_T(const std::vector<ChainLevelSamples>& chain) {
  if (chain.empty()) throw std::domain_error("estimate_T: empty chain");
  const auto R = chain.front().cross_base.size();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain[i].cross_base.size() != R)
      throw std::domain_error("estimate_T: ragged chain samples");
    if (i > 0 && (chain[i].block.level <= chain[i - 1].block.level ||
                  chain[i].block.sigma_id != chain[i - 1].block.sigma_id))
      throw std::domain_error("estimate_T: broken chain");
  }
  std::vector<TEstimate> out;
  const int base_level = chain.front().block.level;
  for (const auto& lvl : chain) {
    std::vector<double> xs(lvl.cross_base.begin(), lvl.cross_base.end());
    const auto me = stats::batch_means(xs, 32);
    TEstimate t;
    t.k = lvl.block.level - base_level;
    t.mean = me.mean;
    t.se = me.se;
    out.push_back(t);
  }
  return out;
}

TightnessReport tightness_report(const std::vector<std::int64_t>& samples,
                                 const std::vector<double>& lambdas,
                                 const std::vector<double>& epsilons) {
  TightnessReport report;
  report.m = estimate_M(samples);
  const auto me = mean_and_se(samples);
  report.mean = me.mean;
  report.se = me.se;
  std::vector<std::int64_t> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const auto R = static_cast<std::int64_t>(sorted.size());
  const double M = static_cast<double>(report.m.m);
  for (const double lambda : lambdas) {
    TightnessRow row;
    row.label = "tail_ge lambda=" + std::to_string(lambda);
    row.threshold = lambda * M;
    const std::int64_t k = count_ge(sorted, row.threshold);
    row.observed = static_cast<double>(k) / static_cast<double>(R);
    row.confidence = stats::binomial_lower_bound(k, R, 0.999);
    row.bound = std::exp(-lambda / 9.0);
    row.pass = row.confidence <= row.bound;
    report.rows.push_back(row);
  }
  for (const double eps : epsilons) {
    TightnessRow row;
    row.label = "tail_lt epsilon=" + std::to_string(eps);
    row.threshold = eps * M;
    const std::int64_t k = R - count_ge(sorted, row.threshold);
    row.observed = static_cast<double>(k) / static_cast<double>(R);
    row.confidence = stats::binomial_lower_bound(k, R, 0.999);
    row.bound = 27.0 * eps;
    row.pass = row.confidence <= row.bound;
    report.rows.push_back(row);
  }
  {
    TightnessRow up;
    up.label = "mean_ratio_upper";
    up.observed = me.mean / M;
    up.confidence = (me.mean - kZ999 * me.se) / M;
    up.bound = 10.0;
    up.pass = up.confidence <= up.bound;
    report.rows.push_back(up);
    TightnessRow down;
    down.label = "mean_ratio_lower";
    down.observed = me.mean / M;
    down.confidence = (me.mean + kZ999 * me.se) / M;
    down.bound = 1.0 / (2.0 * std::exp(1.0));
    down.pass = down.confidence >= down.bound;
    report.rows.push_back(down);
  }
  for (const auto& row : report.rows) report.all_pass &= row.pass;
  return report;
}

GhostCheck two_ghost_check(double A, double theta,
                           const std::vector<std::pair<Pt, double>>& freqs,
                           const ModelParams& pr, std::int64_t n) {
  pr.validate();
  if (theta >= 0.5 || theta <= 0.0)
    throw std::domain_error("two_ghost_check: theta must lie in (0, 1/2)");
  if (A <= 0.0) throw std::domain_error("two_ghost_check: nonpositive prefactor");
  if (n < 1) throw std::domain_error("two_ghost_check: n must be positive");
  GhostCheck check;
  check.n = n;
  stats::KahanSum lhs;
  for (const auto& [z, freq] : freqs) {
    if (is_zero(z)) continue;
    const double weight = std::expm1(pr.beta * kernel_J(pr, z));
    lhs.add(weight * freq * freq);
  }
  check.lhs = lhs.value();
  const double one_minus = 1.0 - 2.0 * theta;
  check.rhs = 40000.0 * A * A /
              (one_minus * one_minus *
               std::pow(static_cast<double>(n), 1.0 + 2.0 * theta));
  check.ratio = check.rhs > 0.0 ? check.lhs / check.rhs : 0.0;
  return check;
}

namespace {

struct Dsu {
  std::vector<std::uint32_t> parent;
  std::vector<std::int64_t> size;

  explicit Dsu(std::size_t n) : parent(n), size(n, 1) {
    for (std::size_t v = 0; v < n; ++v)
      parent[v] = static_cast<std::uint32_t>(v);
  }
  std::uint32_t find(std::uint32_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  void add(const Edge& e) {
    auto a = find(static_cast<std::uint32_t>(e.u));
    auto b = find(static_cast<std::uint32_t>(e.v));
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

struct BlockCounts {
  std::int64_t kmax = 0;
  std::int64_t susc = 0;
};

BlockCounts block_counts(Dsu& dsu, const std::vector<std::uint32_t>& verts) {
  std::unordered_map<std::uint32_t, std::int64_t> counts;
  counts.reserve(verts.size());
  for (const auto v : verts) ++counts[dsu.find(v)];
  BlockCounts out;
  for (const auto& [root, c] : counts) {
    out.kmax = std::max(out.kmax, c);
    out.susc += c * c;
  }
  return out;
}

std::int64_t cross_counts(Dsu& dsu, const std::vector<std::uint32_t>& small,
                          const std::vector<std::uint32_t>& big) {
  std::unordered_map<std::uint32_t, std::int64_t> small_counts;
  small_counts.reserve(small.size());
  for (const auto v : small) ++small_counts[dsu.find(v)];
  std::unordered_map<std::uint32_t, std::int64_t> big_counts;
  big_counts.reserve(small_counts.size() * 2);
  for (const auto v : big) {
    const auto r = dsu.find(v);
    if (small_counts.count(r)) ++big_counts[r];
  }
  std::int64_t total = 0;
  for (const auto& [root, c] : big_counts) total += c * small_counts[root];
  return total;
}

}  // namespace

ChainResult run_block_chain(const ChainPlan& plan) {
  plan.params.validate();
  const auto& sg = plan.sigma;
  const auto& box = plan.box;
  const int N = plan.top_level;
  if (N < 1 || N > sg.depth)
    throw depth_error("run_block_chain: top level beyond sigma depth");
  if (plan.base_level < 0 || plan.base_level > N)
    throw config_error("run_block_chain: base level outside the chain");
  if (!box.contains(plan.base))
    throw config_error("run_block_chain: base point outside the box");
  if (plan.replicates < 1)
    throw config_error("run_block_chain: needs at least one replicate");

  ChainResult out;
  out.spine.resize(static_cast<std::size_t>(N) + 1);
  std::vector<std::vector<std::uint32_t>> spine_verts(
      static_cast<std::size_t>(N) + 1);
  for (int l = 0; l <= N; ++l) {
    out.spine[static_cast<std::size_t>(l)] = block_of(sg, plan.base, l);
    spine_verts[static_cast<std::size_t>(l)] =
        block_vertices(sg, box, out.spine[static_cast<std::size_t>(l)]);
  }
  std::vector<std::vector<Block>> fam_blocks(static_cast<std::size_t>(N));
  std::vector<std::vector<std::vector<std::uint32_t>>> fam_verts(
      static_cast<std::size_t>(N));
  for (int l = 0; l < N; ++l) {
    fam_blocks[static_cast<std::size_t>(l)] =
        children_of(sg, out.spine[static_cast<std::size_t>(l) + 1]);
    for (const auto& child : fam_blocks[static_cast<std::size_t>(l)])
      fam_verts[static_cast<std::size_t>(l)].push_back(
          block_vertices(sg, box, child));
  }

  const auto reps = static_cast<std::size_t>(plan.replicates);
  out.levels.resize(static_cast<std::size_t>(N) + 1);
  for (int l = 0; l <= N; ++l) {
    auto& lvl = out.levels[static_cast<std::size_t>(l)];
    lvl.block = out.spine[static_cast<std::size_t>(l)];
    lvl.kmax.resize(reps);
    lvl.susc.resize(reps);
    lvl.cross_base.resize(reps);
  }
  out.families.resize(static_cast<std::size_t>(N));
  for (int l = 0; l < N; ++l) {
    for (const auto& child : fam_blocks[static_cast<std::size_t>(l)]) {
      BlockEnsemble be;
      be.block = child;
      be.kmax.resize(reps);
      be.susc.resize(reps);
      out.families[static_cast<std::size_t>(l)].push_back(std::move(be));
    }
  }
  std::vector<std::uint8_t> truncated(reps, 0);

  const auto is_spine = [&](const Block& b) {
    if (b.level < 1 || b.level > N) return false;
    return b.corner == out.spine[static_cast<std::size_t>(b.level)].corner;
  };

  parallel_replicates(plan.replicates, plan.threads, [&](std::int64_t rep) {
    RandomSource src{plan.src.seed,
                     plan.src.stream + static_cast<std::uint64_t>(rep)};
    const auto cfg = sample_layered(plan.params, sg, box, N, src, plan.sampler);
    truncated[static_cast<std::size_t>(rep)] = cfg.truncated_blocks ? 1 : 0;
    Dsu dsu(static_cast<std::size_t>(box.vertex_count));
    for (const auto& layer : cfg.layers) {
      if (layer.kind == LayerKind::Block && is_spine(layer.block)) continue;
      for (const auto& e : layer.edges) dsu.add(e);
    }
    const auto& base_verts =
        spine_verts[static_cast<std::size_t>(plan.base_level)];
    for (int l = 0; l <= N; ++l) {
      if (l >= 1) {
        for (const auto& layer : cfg.layers) {
          if (layer.kind == LayerKind::Block && layer.block.level == l &&
              is_spine(layer.block))
            for (const auto& e : layer.edges) dsu.add(e);
        }
      }
      auto& lvl = out.levels[static_cast<std::size_t>(l)];
      const auto bc = block_counts(dsu, spine_verts[static_cast<std::size_t>(l)]);
      lvl.kmax[static_cast<std::size_t>(rep)] = bc.kmax;
      lvl.susc[static_cast<std::size_t>(rep)] = bc.susc;
      lvl.cross_base[static_cast<std::size_t>(rep)] =
          l >= plan.base_level
              ? cross_counts(dsu, base_verts,
                             spine_verts[static_cast<std::size_t>(l)])
              : 0;
      if (l < N) {
        auto& family = out.families[static_cast<std::size_t>(l)];
        for (std::size_t ci = 0; ci < family.size(); ++ci) {
          const auto cc =
              block_counts(dsu, fam_verts[static_cast<std::size_t>(l)][ci]);
          family[ci].kmax[static_cast<std::size_t>(rep)] = cc.kmax;
          family[ci].susc[static_cast<std::size_t>(rep)] = cc.susc;
        }
      }
    }
  });

  for (const auto t : truncated) out.truncated |= t != 0;
  for (int l = 0; l < N; ++l)
    out.goodness.push_back(
        classify_good(out.families[static_cast<std::size_t>(l)], plan.params));
  // Ancestral goodness: the top spine block has no sampled siblings and is
  // treated as good; every other flag chains through its spine ancestors.
  std::vector<bool> spine_anc(static_cast<std::size_t>(N) + 1, true);
  for (int l = N - 1; l >= 0; --l) {
    const auto& fam = out.goodness[static_cast<std::size_t>(l)];
    bool spine_good = false;
    for (const auto& e : fam.entries)
      if (e.block.corner == out.spine[static_cast<std::size_t>(l)].corner)
        spine_good = e.good;
    spine_anc[static_cast<std::size_t>(l)] =
        spine_good && spine_anc[static_cast<std::size_t>(l) + 1];
  }
  for (int l = 0; l < N; ++l)
    for (auto& e : out.goodness[static_cast<std::size_t>(l)].entries)
      e.ancestrally_good = e.good && spine_anc[static_cast<std::size_t>(l) + 1];
  return out;
}

}  // namespace perco
