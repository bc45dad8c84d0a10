#include "perco/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "perco/clusters.hpp"
#include "perco/ensemble.hpp"
#include "perco/stats.hpp"

namespace perco {

namespace {

double default_q(const ModelParams& pr) {
  return (static_cast<double>(pr.d) + pr.alpha) / (2.0 * pr.d);
}

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// Mean |K_max ∩ box| over coupled replicates at one (beta, side) point.
// Streams depend on (seed, side, replicate) only, never on beta.
double coupled_mean_kmax(const BetacPlan& plan, double beta,
                         std::int64_t side) {
  ModelParams pr = plan.params;
  pr.beta = beta;
  const BoxGeometry box{pr.d, side};
  SamplerOptions opts;
  opts.mode = SampleMode::Coupled;
  const std::uint64_t seed =
      mix_key(plan.src.seed, static_cast<std::uint64_t>(side));
  std::vector<std::int64_t> kmax(static_cast<std::size_t>(plan.replicates));
  const bool hier = plan.hierarchical;
  SigmaDecomposition sg;
  int level = 0;
  if (hier) {
    while (ipow(pr.L, level) < side) ++level;
    if (ipow(pr.L, level) != side)
      throw config_error("estimate_beta_c: hierarchical side must be a power of L");
    sg = SigmaDecomposition::zeros(pr.d, pr.L, level);
  }
  parallel_replicates(plan.replicates, plan.threads, [&](std::int64_t rep) {
    const RandomSource src{seed,
                           plan.src.stream + static_cast<std::uint64_t>(rep)};
    const EdgeConfiguration cfg =
        hier ? sample_hierarchical(pr, sg, box, level, src, opts)
             : sample_plain(pr, box, src, opts);
    const auto lab = label_clusters(cfg.union_edges(), box.vertex_count);
    std::int64_t best = 0;
    for (std::size_t v = 0; v < lab.parent.size(); ++v)
      if (lab.parent[v] == v) best = std::max(best, lab.size[v]);
    kmax[static_cast<std::size_t>(rep)] = best;
  });
  stats::KahanSum sum;
  for (const auto k : kmax) sum.add(static_cast<double>(k));
  return sum.value() / static_cast<double>(plan.replicates);
}

}  // namespace

BetacResult estimate_beta_c(const BetacPlan& plan) {
  ModelParams pr = plan.params;
  pr.beta = 0.0;
  pr.validate();
  if (plan.sides.size() < 2)
    throw config_error("estimate_beta_c: needs at least two box sides");
  if (!std::is_sorted(plan.sides.begin(), plan.sides.end()))
    throw config_error("estimate_beta_c: sides must ascend");
  if (plan.sides.back() < 4 * plan.sides.front())
    throw config_error("estimate_beta_c: side ratio must be at least 4");
  if (plan.replicates < 1)
    throw config_error("estimate_beta_c: needs replicates");

  // Two modes share the bisection driver. With an explicit q (or only two
  // sides) the statistic is the normalized-mean ratio and the root is at 1.
  // With three or more sides and no q the statistic is the gap between the
  // growth exponents of the upper and lower side pairs; its root is the
  // scale-invariant point, where all normalized curves cross at once, and
  // the growth measured there is reported back as q. The gap statistic sags
  // back to zero once boxes saturate deep in the supercritical phase, so a
  // saturated smallest box counts as supercritical outright.
  const bool invariance = plan.q <= 0.0 && plan.sides.size() >= 3;
  const std::int64_t small = plan.sides.front();
  const std::int64_t mid_side = plan.sides[plan.sides.size() / 2];
  const std::int64_t big = plan.sides.back();
  if (invariance && (mid_side < 2 * small || big < 2 * mid_side))
    throw config_error("estimate_beta_c: sides too close for a growth gap");
  const double q_fixed = plan.q > 0.0 ? plan.q : default_q(plan.params);
  const double norm_small =
      std::pow(static_cast<double>(small), q_fixed * plan.params.d);
  const double norm_big =
      std::pow(static_cast<double>(big), q_fixed * plan.params.d);
  const double v_small = std::pow(static_cast<double>(small), plan.params.d);

  BetacResult result;
  result.q = q_fixed;
  const auto growth = [&](double e_lo, double e_hi, std::int64_t s_lo,
                          std::int64_t s_hi) {
    return std::log(e_hi / e_lo) /
           (plan.params.d * std::log(static_cast<double>(s_hi) /
                                     static_cast<double>(s_lo)));
  };
  // Returns true when the evaluation point looks supercritical.
  const auto supercritical = [&](double beta) {
    const double e_small = coupled_mean_kmax(plan, beta, small);
    const double e_big = coupled_mean_kmax(plan, beta, big);
    if (!invariance) {
      const double r = (e_big / norm_big) / (e_small / norm_small);
      result.curve.emplace_back(beta, r);
      return r >= 1.0;
    }
    const double e_mid = coupled_mean_kmax(plan, beta, mid_side);
    const double gap =
        growth(e_mid, e_big, mid_side, big) - growth(e_small, e_mid, small, mid_side);
    result.curve.emplace_back(beta, gap);
    return e_small >= 0.4 * v_small || gap > 0.0;
  };

  double lo = plan.bracket_lo;
  double hi = plan.bracket_hi;
  if (!(lo > 0.0) || hi <= lo)
    throw config_error("estimate_beta_c: bad initial bracket");
  int widen = 0;
  while (supercritical(lo)) {
    if (++widen > plan.max_widen)
      throw bisection_error("estimate_beta_c: lower bracket never subcritical");
    lo /= 2.0;
  }
  widen = 0;
  while (!supercritical(hi)) {
    if (++widen > plan.max_widen)
      throw bisection_error("estimate_beta_c: upper bracket never supercritical");
    hi *= 2.0;
  }
  for (int it = 0; it < plan.max_iters && hi - lo > plan.tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (supercritical(mid))
      hi = mid;
    else
      lo = mid;
  }
  result.lo = lo;
  result.hi = hi;
  result.beta_c = 0.5 * (lo + hi);
  if (invariance) {
    const double e_small = coupled_mean_kmax(plan, result.beta_c, small);
    const double e_big = coupled_mean_kmax(plan, result.beta_c, big);
    result.q = growth(e_small, e_big, small, big);
  }
  return result;
}

namespace {

std::vector<int> default_radii(std::int64_t side) {
  std::vector<int> radii;
  for (std::int64_t r = 1; r <= side / 4; r *= 2)
    radii.push_back(static_cast<int>(r));
  return radii;
}

std::vector<std::int64_t> default_tail_grid(std::int64_t vertex_count) {
  std::vector<std::int64_t> grid;
  for (std::int64_t n = 1; n <= vertex_count / 16; n *= 2) grid.push_back(n);
  return grid;
}

std::vector<Pt> central_origins(const BoxGeometry& box, int origins) {
  int g = 1;
  while (ipow(g, box.d) < origins) ++g;
  const Coord lo = box.side / 4;
  const Coord span = box.side / 2;
  std::vector<Pt> out;
  Pt idx = Pt::zero(box.d);
  for (;;) {
    Pt p = Pt::zero(box.d);
    for (int i = 0; i < box.d; ++i)
      p[i] = lo + (2 * idx[i] + 1) * span / (2 * g);
    out.push_back(p);
    if (static_cast<int>(out.size()) == origins) break;
    int i = 0;
    for (; i < box.d; ++i) {
      if (++idx[i] < g) break;
      idx[i] = 0;
    }
    if (i == box.d) break;
  }
  return out;
}

}  // namespace

SurveyResult run_critical_survey(const SurveyPlan& plan) {
  plan.params.validate();
  if (plan.replicates < 1)
    throw config_error("run_critical_survey: needs replicates");
  const auto& box = plan.box;
  const auto V = box.vertex_count;
  std::vector<int> radii;
  if (plan.origins > 0)
    radii = plan.radii.empty() ? default_radii(box.side) : plan.radii;
  for (const int r : radii)
    if (r < 1 || r > box.side / 4)
      throw std::domain_error(
          "run_critical_survey: radii must satisfy 1 <= r <= side/4");
  std::vector<std::int64_t> grid =
      plan.tail_grid.empty() && plan.collect_tail ? default_tail_grid(V)
                                                  : plan.tail_grid;
  for (const auto n : grid)
    if (n < 1 || n > V)
      throw std::domain_error("run_critical_survey: tail grid outside 1..V");
  const std::vector<Pt> origins =
      plan.origins > 0 ? central_origins(box, plan.origins) : std::vector<Pt>{};

  SurveyResult result;
  result.replicates = plan.replicates;
  result.ghost_origin = box.center();
  const auto origin_idx =
      static_cast<std::uint32_t>(box.index(result.ghost_origin));

  const auto reps = static_cast<std::size_t>(plan.replicates);
  std::vector<std::vector<double>> profile_rows(
      radii.size(), std::vector<double>(reps, 0.0));
  std::vector<std::vector<double>> tail_rows(
      grid.size(), std::vector<double>(reps, 0.0));
  std::vector<std::unique_ptr<std::atomic<std::int32_t>[]>> ghost_counts;
  for (std::size_t gi = 0; gi < plan.ghost_n.size(); ++gi) {
    ghost_counts.emplace_back(new std::atomic<std::int32_t>[
        static_cast<std::size_t>(V)]);
    for (std::int64_t v = 0; v < V; ++v)
      ghost_counts.back()[static_cast<std::size_t>(v)].store(
          0, std::memory_order_relaxed);
  }

  parallel_replicates(plan.replicates, plan.threads, [&](std::int64_t rep) {
    const RandomSource src{plan.src.seed,
                           plan.src.stream + static_cast<std::uint64_t>(rep)};
    const auto cfg = sample_plain(plan.params, box, src, plan.sampler);
    const auto lab = label_clusters(cfg.union_edges(), V);
    if (!origins.empty()) {
      for (const auto& origin : origins) {
        const auto counts = origin_connection_counts(lab, box, origin, radii);
        for (std::size_t ri = 0; ri < radii.size(); ++ri) {
          double ball = 1.0;
          for (int i = 0; i < box.d; ++i) ball *= 2.0 * radii[ri] + 1.0;
          profile_rows[ri][static_cast<std::size_t>(rep)] +=
              static_cast<double>(counts[ri]) / ball /
              static_cast<double>(origins.size());
        }
      }
    }
    if (!grid.empty()) {
      const auto hist = cluster_size_histogram(lab);
      for (std::size_t gi = 0; gi < grid.size(); ++gi)
        tail_rows[gi][static_cast<std::size_t>(rep)] =
            cluster_tail_from_histogram(hist, grid[gi], V);
    }
    for (std::size_t gi = 0; gi < plan.ghost_n.size(); ++gi) {
      const auto n = plan.ghost_n[gi];
      for (std::int64_t x = 0; x < V; ++x) {
        if (two_ghost_indicator(lab, origin_idx, static_cast<std::uint32_t>(x),
                                n))
          ghost_counts[gi][static_cast<std::size_t>(x)].fetch_add(
              1, std::memory_order_relaxed);
      }
    }
  });

  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const auto me = stats::batch_means(profile_rows[ri], 32);
    result.profile.push_back(
        {static_cast<double>(radii[ri]), me.mean, me.se});
  }
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const auto me = stats::batch_means(tail_rows[gi], 32);
    result.tail.push_back({static_cast<double>(grid[gi]), me.mean, me.se});
  }
  for (std::size_t gi = 0; gi < plan.ghost_n.size(); ++gi) {
    std::vector<std::pair<Pt, double>> freqs;
    freqs.reserve(static_cast<std::size_t>(V) - 1);
    for (std::int64_t x = 0; x < V; ++x) {
      if (x == static_cast<std::int64_t>(origin_idx)) continue;
      const double f =
          static_cast<double>(ghost_counts[gi][static_cast<std::size_t>(x)]
                                  .load(std::memory_order_relaxed)) /
          static_cast<double>(plan.replicates);
      freqs.emplace_back(sub(box.point(x), result.ghost_origin), f);
    }
    result.ghost.emplace_back(plan.ghost_n[gi], std::move(freqs));
  }
  return result;
}

std::vector<ProfilePoint> two_point_profile(const ModelParams& pr,
                                            const BoxGeometry& box,
                                            std::int64_t replicates,
                                            int origins, RandomSource src,
                                            int threads) {
  SurveyPlan plan;
  plan.params = pr;
  plan.box = box;
  plan.replicates = replicates;
  plan.origins = origins;
  plan.collect_tail = false;
  plan.src = src;
  plan.threads = threads;
  return run_critical_survey(plan).profile;
}

std::vector<ProfilePoint> cluster_tail_profile(const ModelParams& pr,
                                               const BoxGeometry& box,
                                               std::int64_t replicates,
                                               RandomSource src, int threads) {
  SurveyPlan plan;
  plan.params = pr;
  plan.box = box;
  plan.replicates = replicates;
  plan.origins = 0;
  plan.src = src;
  plan.threads = threads;
  return run_critical_survey(plan).tail;
}

namespace {

std::vector<ProfilePoint> fit_window(const std::vector<ProfilePoint>& table,
                                     std::vector<std::string>* warnings) {
  double rmax = 0.0;
  for (const auto& p : table) rmax = std::max(rmax, p.r);
  std::vector<ProfilePoint> window;
  for (const auto& p : table) {
    if (p.r < 4.0 || p.r > rmax / 2.0) continue;
    if (p.value <= 0.0) {
      if (warnings)
        warnings->push_back("dropped nonpositive value at r=" +
                            std::to_string(p.r));
      continue;
    }
    window.push_back(p);
  }
  return window;
}

}  // namespace

PowerFit fit_power_law(const std::vector<ProfilePoint>& table) {
  PowerFit fit;
  const auto window = fit_window(table, &fit.warnings);
  if (window.size() < 4)
    throw insufficient_samples_error("fit_power_law: fewer than 4 usable points");
  double rmin = window.front().r, rmax = window.front().r;
  for (const auto& p : window) {
    rmin = std::min(rmin, p.r);
    rmax = std::max(rmax, p.r);
  }
  if (rmax < 4.0 * rmin)
    throw insufficient_samples_error(
        "fit_power_law: window spans fewer than two octaves");
  std::vector<double> x, y, w;
  bool weighted = true;
  for (const auto& p : window)
    if (p.se <= 0.0) weighted = false;
  for (const auto& p : window) {
    x.push_back(std::log(p.r));
    y.push_back(std::log(p.value));
    if (weighted) {
      const double sigma = p.se / p.value;  // error of log(value)
      w.push_back(1.0 / (sigma * sigma));
    } else {
      w.push_back(1.0);
    }
  }
  const auto lin = stats::weighted_linfit(x, y, w);
  fit.exponent = lin.slope;
  fit.se = lin.se_slope;
  fit.prefactor = std::exp(lin.intercept);
  fit.chi2 = lin.chi2;
  for (const auto& p : window) fit.window.push_back(p.r);
  return fit;
}

double constrained_prefactor(const std::vector<ProfilePoint>& tail,
                             double theta) {
  double A = 0.0;
  for (const auto& p : tail)
    if (p.value > 0.0) A = std::max(A, p.value * std::pow(p.r, theta));
  if (A <= 0.0)
    throw insufficient_samples_error("constrained_prefactor: empty tail");
  return A;
}

stats::MannKendall compensated_trend(const std::vector<ProfilePoint>& table,
                                     double drift) {
  auto window = fit_window(table, nullptr);
  std::sort(window.begin(), window.end(),
            [](const ProfilePoint& a, const ProfilePoint& b) {
              return a.r < b.r;
            });
  std::vector<double> ys;
  for (const auto& p : window)
    ys.push_back(p.value * std::pow(p.r, drift));
  return stats::mann_kendall(ys);
}

HierResult hierarchical_profile(const HierPlan& plan) {
  ModelParams pr = plan.params;
  if (plan.levels < 2)
    throw config_error("hierarchical_profile: needs at least two levels");
  if (plan.replicates < 2)
    throw config_error("hierarchical_profile: needs replicates");
  const std::int64_t side = ipow(pr.L, plan.levels);
  const BoxGeometry box{pr.d, side};
  const auto sg = SigmaDecomposition::zeros(pr.d, pr.L, plan.levels);

  HierResult result;
  if (pr.beta > 0.0) {
    result.beta_c = pr.beta;
    result.lo = result.hi = pr.beta;
  } else {
    BetacPlan bp;
    bp.params = pr;
    bp.sides = {ipow(pr.L, plan.levels - 1), side};
    bp.replicates = plan.betac_replicates;
    bp.q = plan.q;
    bp.hierarchical = true;
    bp.hier_levels = plan.levels;
    bp.src = {mix_key(plan.src.seed, 0x6869657261ull), plan.src.stream};
    bp.threads = plan.threads;
    const auto est = estimate_beta_c(bp);
    result.beta_c = est.beta_c;
    result.lo = est.lo;
    result.hi = est.hi;
    pr.beta = est.beta_c;
  }

  const auto V = box.vertex_count;
  const int N = plan.levels;
  const auto reps = static_cast<std::size_t>(plan.replicates);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(N),
                                        std::vector<double>(reps, 0.0));
  SamplerOptions opts;
  parallel_replicates(plan.replicates, plan.threads, [&](std::int64_t rep) {
    const RandomSource src{plan.src.seed,
                           plan.src.stream + static_cast<std::uint64_t>(rep)};
    const auto cfg = sample_hierarchical(pr, sg, box, N, src, opts);
    const auto lab = label_clusters(cfg.union_edges(), V);
    std::int64_t prev = V;  // connected ordered pairs within the same 0-block
    for (int n = 1; n <= N; ++n) {
      const std::int64_t bw = ipow(pr.L, n);
      std::unordered_map<std::uint64_t, std::int64_t> counts;
      counts.reserve(static_cast<std::size_t>(V) / 2);
      for (std::int64_t v = 0; v < V; ++v) {
        const Pt p = box.point(v);
        std::uint64_t block = 0;
        for (int i = 0; i < box.d; ++i)
          block = block * static_cast<std::uint64_t>(box.side / bw + 1) +
                  static_cast<std::uint64_t>(p[i] / bw);
        const std::uint64_t key =
            block * static_cast<std::uint64_t>(V) +
            lab.root(static_cast<std::uint32_t>(v));
        ++counts[key];
      }
      std::int64_t same_block = 0;
      for (const auto& [key, c] : counts) same_block += c * c;
      const double pairs =
          static_cast<double>(V) *
          static_cast<double>(ipow(pr.L, n * pr.d) - ipow(pr.L, (n - 1) * pr.d));
      rows[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(rep)] =
          static_cast<double>(same_block - prev) / pairs;
      prev = same_block;
    }
  });
  for (int n = 1; n <= N; ++n) {
    const auto me = stats::batch_means(rows[static_cast<std::size_t>(n - 1)], 32);
    result.profile.push_back(
        {static_cast<double>(ipow(pr.L, n)), me.mean, me.se});
  }
  result.fit = fit_power_law(result.profile);
  return result;
}

}  // namespace perco
