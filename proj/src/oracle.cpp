#include "perco/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "perco/clusters.hpp"
#include "perco/ensemble.hpp"
#include "perco/stats.hpp"

namespace perco {

namespace {

struct RandomEdge {
  std::uint8_t u = 0, v = 0;
  double p = 0.0;
};

struct EdgeLists {
  std::vector<RandomEdge> random;                       // 0 < p < 1
  std::vector<std::pair<std::uint8_t, std::uint8_t>> forced;  // p == 1
};

EdgeLists split_edges(const TinyInstance& inst) {
  EdgeLists lists;
  for (int u = 0; u < inst.nv; ++u)
    for (int v = u + 1; v < inst.nv; ++v) {
      const double p = inst.p(u, v);
      if (p >= 1.0)
        lists.forced.emplace_back(static_cast<std::uint8_t>(u),
                                  static_cast<std::uint8_t>(v));
      else if (p > 0.0)
        lists.random.push_back({static_cast<std::uint8_t>(u),
                                static_cast<std::uint8_t>(v), p});
    }
  return lists;
}

struct Accumulator {
  std::vector<stats::KahanSum> sums;
  stats::KahanSum mass;
  std::vector<double> scratch;

  void leaf(double prob,
            const std::function<void(const SmallDsu&, std::vector<double>&)>& eval,
            const SmallDsu& dsu) {
    scratch.clear();
    eval(dsu, scratch);
    if (sums.empty()) sums.resize(scratch.size());
    for (std::size_t i = 0; i < scratch.size(); ++i)
      sums[i].add(prob * scratch[i]);
    mass.add(prob);
  }
};

// Depth-first sweep over the random edges from index i on. An edge whose
// endpoints are already connected cannot change the partition, so both of
// its states are covered by one descent with weight p + (1-p) = 1.
void sweep(const std::vector<RandomEdge>& edges, std::size_t i, double prob,
           SmallDsu& dsu,
           const std::function<void(const SmallDsu&, std::vector<double>&)>& eval,
           Accumulator& acc) {
  while (i < edges.size() && dsu.find(edges[i].u) == dsu.find(edges[i].v)) ++i;
  if (i == edges.size()) {
    acc.leaf(prob, eval, dsu);
    return;
  }
  const auto& e = edges[i];
  std::pair<std::uint8_t, std::uint8_t> undo;
  dsu.unite(e.u, e.v, &undo);
  sweep(edges, i + 1, prob * e.p, dsu, eval, acc);
  dsu.undo(undo);
  sweep(edges, i + 1, prob * (1.0 - e.p), dsu, eval, acc);
}

std::vector<double> finish(std::vector<Accumulator>& parts) {
  std::size_t nstats = 0;
  for (const auto& part : parts) nstats = std::max(nstats, part.sums.size());
  std::vector<stats::KahanSum> sums(nstats);
  stats::KahanSum mass;
  for (const auto& part : parts) {
    for (std::size_t i = 0; i < part.sums.size(); ++i)
      sums[i].add(part.sums[i].value());
    mass.add(part.mass.value());
  }
  if (std::abs(mass.value() - 1.0) > 1e-12)
    throw std::runtime_error("oracle: probability mass drifted from 1");
  std::vector<double> out(nstats);
  for (std::size_t i = 0; i < nstats; ++i) out[i] = sums[i].value();
  return out;
}

}  // namespace

TinyInstance TinyInstance::empty(int nv) {
  if (nv < 1 || nv > kOracleMaxVertices)
    throw size_error("tiny instance: vertex count out of range");
  TinyInstance inst;
  inst.nv = nv;
  inst.prob.assign(static_cast<std::size_t>(nv) * static_cast<std::size_t>(nv),
                   0.0);
  return inst;
}

void TinyInstance::set_p(int u, int v, double value) {
  if (u == v) throw std::domain_error("tiny instance: diagonal pair");
  if (value < 0.0 || value > 1.0)
    throw std::domain_error("tiny instance: probability outside [0,1]");
  prob[static_cast<std::size_t>(u) * static_cast<std::size_t>(nv) +
       static_cast<std::size_t>(v)] = value;
  prob[static_cast<std::size_t>(v) * static_cast<std::size_t>(nv) +
       static_cast<std::size_t>(u)] = value;
}

int TinyInstance::random_edge_count() const {
  int count = 0;
  for (int u = 0; u < nv; ++u)
    for (int v = u + 1; v < nv; ++v) {
      const double q = p(u, v);
      if (q > 0.0 && q < 1.0) ++count;
    }
  return count;
}

void TinyInstance::validate() const {
  if (nv < 1 || nv > kOracleMaxVertices)
    throw size_error("tiny instance: vertex count out of range");
  for (int u = 0; u < nv; ++u) {
    if (p(u, u) != 0.0)
      throw std::domain_error("tiny instance: nonzero diagonal");
    for (int v = 0; v < nv; ++v) {
      const double q = p(u, v);
      if (q < 0.0 || q > 1.0 || q != p(v, u))
        throw std::domain_error("tiny instance: bad probability matrix");
    }
  }
  if (random_edge_count() > kOracleMaxEdges)
    throw size_error("tiny instance: too many random pairs to enumerate");
}

void SmallDsu::reset(int nv) {
  for (int v = 0; v < nv; ++v) {
    parent[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
    size[static_cast<std::size_t>(v)] = 1;
  }
}

int SmallDsu::find(int v) const {
  while (parent[static_cast<std::size_t>(v)] != v)
    v = parent[static_cast<std::size_t>(v)];
  return v;
}

bool SmallDsu::unite(int a, int b, std::pair<std::uint8_t, std::uint8_t>* undo) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size[static_cast<std::size_t>(a)] < size[static_cast<std::size_t>(b)])
    std::swap(a, b);
  parent[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(a);
  size[static_cast<std::size_t>(a)] =
      static_cast<std::int8_t>(size[static_cast<std::size_t>(a)] +
                               size[static_cast<std::size_t>(b)]);
  if (undo) *undo = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)};
  return true;
}

void SmallDsu::undo(std::pair<std::uint8_t, std::uint8_t> rec) {
  const auto a = rec.first, b = rec.second;
  size[a] = static_cast<std::int8_t>(size[a] - size[b]);
  parent[b] = b;
}

std::vector<double> expected_stats(
    const TinyInstance& inst,
    const std::function<void(const SmallDsu&, std::vector<double>&)>& eval,
    int threads) {
  inst.validate();
  const EdgeLists lists = split_edges(inst);
  const int total = static_cast<int>(lists.random.size());
  // Fixed split point so results are bit-identical for every thread count:
  // the first `head` edges are enumerated as plain bitmasks, the rest by the
  // pruned sweep.
  const int head = total >= 16 ? 10 : 0;
  const std::uint32_t tasks = std::uint32_t{1} << head;
  std::vector<Accumulator> parts(tasks);
  const int nthreads = resolve_threads(threads);
  (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(nthreads)
#endif
  for (std::int64_t mask = 0; mask < static_cast<std::int64_t>(tasks); ++mask) {
    SmallDsu dsu;
    dsu.reset(inst.nv);
    for (const auto& f : lists.forced) dsu.unite(f.first, f.second, nullptr);
    double prob = 1.0;
    for (int i = 0; i < head; ++i) {
      const auto& e = lists.random[static_cast<std::size_t>(i)];
      if (mask >> i & 1) {
        prob *= e.p;
        dsu.unite(e.u, e.v, nullptr);
      } else {
        prob *= 1.0 - e.p;
      }
    }
    sweep(lists.random, static_cast<std::size_t>(head), prob, dsu, eval,
          parts[static_cast<std::size_t>(mask)]);
  }
  return finish(parts);
}

std::vector<double> expected_stats_reference(
    const TinyInstance& inst,
    const std::function<void(const SmallDsu&, std::vector<double>&)>& eval) {
  inst.validate();
  const EdgeLists lists = split_edges(inst);
  if (lists.random.size() > 24)
    throw size_error("reference enumeration: too many random pairs");
  std::vector<Accumulator> parts(1);
  const std::uint32_t patterns = std::uint32_t{1}
                                 << static_cast<unsigned>(lists.random.size());
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    SmallDsu dsu;
    dsu.reset(inst.nv);
    for (const auto& f : lists.forced) dsu.unite(f.first, f.second, nullptr);
    double prob = 1.0;
    for (std::size_t i = 0; i < lists.random.size(); ++i) {
      const auto& e = lists.random[i];
      if (mask >> i & 1) {
        prob *= e.p;
        dsu.unite(e.u, e.v, nullptr);
      } else {
        prob *= 1.0 - e.p;
      }
    }
    parts[0].leaf(prob, eval, dsu);
  }
  return finish(parts);
}

double exact_connection_probability(const TinyInstance& inst, int x, int y) {
  if (x < 0 || x >= inst.nv || y < 0 || y >= inst.nv)
    throw std::domain_error("exact_connection_probability: vertex out of range");
  if (x == y) return 1.0;
  const auto out = expected_stats(
      inst, [&](const SmallDsu& dsu, std::vector<double>& s) {
        s.push_back(dsu.find(x) == dsu.find(y) ? 1.0 : 0.0);
      });
  return out[0];
}

std::vector<double> exact_cluster_law(const TinyInstance& inst, int x) {
  if (x < 0 || x >= inst.nv)
    throw std::domain_error("exact_cluster_law: vertex out of range");
  const auto out = expected_stats(
      inst, [&](const SmallDsu& dsu, std::vector<double>& s) {
        s.assign(static_cast<std::size_t>(inst.nv) + 1, 0.0);
        s[static_cast<std::size_t>(dsu.size[static_cast<std::size_t>(dsu.find(x))])] =
            1.0;
      });
  return out;
}

namespace {

int kmax_in(const SmallDsu& dsu, const std::vector<int>& B) {
  std::array<std::int8_t, kOracleMaxVertices> count{};
  int best = 0;
  for (const int v : B) {
    const int r = dsu.find(v);
    const int c = ++count[static_cast<std::size_t>(r)];
    best = std::max(best, c);
  }
  return best;
}

std::int64_t susc_in(const SmallDsu& dsu, const std::vector<int>& B) {
  std::array<std::int8_t, kOracleMaxVertices> count{};
  for (const int v : B) ++count[static_cast<std::size_t>(dsu.find(v))];
  std::int64_t total = 0;
  for (const auto c : count) total += std::int64_t{c} * c;
  return total;
}

}  // namespace

std::vector<double> exact_kmax_law(const TinyInstance& inst,
                                   const std::vector<int>& B) {
  const auto out = expected_stats(
      inst, [&](const SmallDsu& dsu, std::vector<double>& s) {
        s.assign(B.size() + 1, 0.0);
        s[static_cast<std::size_t>(kmax_in(dsu, B))] = 1.0;
      });
  return out;
}

double exact_mean_kmax(const TinyInstance& inst, const std::vector<int>& B) {
  const auto out = expected_stats(
      inst, [&](const SmallDsu& dsu, std::vector<double>& s) {
        s.push_back(static_cast<double>(kmax_in(dsu, B)));
      });
  return out[0];
}

double exact_mean_restricted_susceptibility(const TinyInstance& inst,
                                            const std::vector<int>& B) {
  const auto out = expected_stats(
      inst, [&](const SmallDsu& dsu, std::vector<double>& s) {
        s.push_back(static_cast<double>(susc_in(dsu, B)));
      });
  return out[0];
}

TinyInstance restricted_instance(const ModelParams& pr,
                                 const SigmaDecomposition& sg,
                                 const BoxGeometry& box, const Block& parent) {
  pr.validate();
  if (box.vertex_count > kOracleMaxVertices)
    throw size_error("restricted_instance: box too large for enumeration");
  const auto children = children_of(sg, parent);
  TinyInstance inst = TinyInstance::empty(static_cast<int>(box.vertex_count));
  for (int u = 0; u < inst.nv; ++u)
    for (int v = u + 1; v < inst.nv; ++v) {
      const double rate = kernel_J_restricted(pr, sg, children.front(),
                                              box.point(u), box.point(v));
      inst.set_p(u, v, -std::expm1(-pr.beta * rate));
    }
  inst.validate();
  return inst;
}

TinyInstance plain_instance(const ModelParams& pr, const BoxGeometry& box) {
  pr.validate();
  if (box.vertex_count > kOracleMaxVertices)
    throw size_error("plain_instance: box too large for enumeration");
  TinyInstance inst = TinyInstance::empty(static_cast<int>(box.vertex_count));
  for (int u = 0; u < inst.nv; ++u)
    for (int v = u + 1; v < inst.nv; ++v) {
      const double rate = kernel_J(pr, sub(box.point(v), box.point(u)));
      inst.set_p(u, v, -std::expm1(-pr.beta * rate));
    }
  inst.validate();
  return inst;
}

ExactChildrenReport exact_good_children(const ModelParams& pr,
                                        const SigmaDecomposition& sg,
                                        const BoxGeometry& box,
                                        const Block& parent, int threads) {
  ExactChildrenReport report;
  report.parent = parent;
  const TinyInstance inst = restricted_instance(pr, sg, box, parent);
  const auto children = children_of(sg, parent);
  std::vector<std::vector<int>> members;
  for (const auto& child : children) {
    ChildStats cs;
    cs.child = child;
    for (const auto v : block_vertices(sg, box, child))
      cs.vertices.push_back(static_cast<int>(v));
    members.push_back(cs.vertices);
    report.children.push_back(std::move(cs));
  }
  const auto out = expected_stats(
      inst,
      [&](const SmallDsu& dsu, std::vector<double>& s) {
        for (const auto& B : members) {
          s.push_back(static_cast<double>(kmax_in(dsu, B)));
          s.push_back(static_cast<double>(susc_in(dsu, B)));
        }
      },
      threads);
  const std::size_t n = report.children.size();
  for (std::size_t i = 0; i < n; ++i) {
    report.children[i].mean_kmax = out[2 * i];
    report.children[i].mean_susceptibility = out[2 * i + 1];
  }
  // Exact comparisons; equal values (up to rounding) count as ≤.
  const auto leq = [](double a, double b) {
    return a <= b + 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  const auto need =
      static_cast<int>(std::floor(std::pow(static_cast<double>(sg.L), pr.d) / 2.0)) -
      1;
  for (std::size_t i = 0; i < n; ++i) {
    int kmax_ok = 0, susc_ok = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (leq(report.children[i].mean_kmax, report.children[j].mean_kmax))
        ++kmax_ok;
      if (leq(report.children[i].mean_susceptibility,
              report.children[j].mean_susceptibility))
        ++susc_ok;
    }
    report.children[i].good = kmax_ok >= need && susc_ok >= 1;
    if (report.children[i].good) ++report.good_count;
  }
  return report;
}

SamplerCheckReport verify_sampler(
    const TinyInstance& inst,
    const std::function<std::vector<Edge>(std::int64_t)>& draw,
    std::int64_t count) {
  inst.validate();
  if (count < 1) throw std::domain_error("verify_sampler: no draws");
  const EdgeLists lists = split_edges(inst);
  const int nrandom = static_cast<int>(lists.random.size());
  std::vector<int> bit(static_cast<std::size_t>(inst.nv) *
                           static_cast<std::size_t>(inst.nv),
                       -1);
  for (int i = 0; i < nrandom; ++i) {
    const auto& e = lists.random[static_cast<std::size_t>(i)];
    bit[static_cast<std::size_t>(e.u) * static_cast<std::size_t>(inst.nv) +
        e.v] = i;
  }
  SamplerCheckReport report;
  report.draws = count;
  const bool pattern = nrandom <= 12;
  std::vector<std::int64_t> pair_count(static_cast<std::size_t>(nrandom), 0);
  std::vector<std::int64_t> mask_count(
      pattern ? (std::size_t{1} << static_cast<unsigned>(nrandom)) : 0, 0);
  for (std::int64_t rep = 0; rep < count; ++rep) {
    auto edges = draw(rep);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::uint32_t mask = 0;
    for (const auto& e : edges) {
      if (e.u < 0 || e.v >= inst.nv)
        throw mismatch_error("verify_sampler: edge outside the instance");
      const int b = bit[static_cast<std::size_t>(e.u) *
                            static_cast<std::size_t>(inst.nv) +
                        static_cast<std::size_t>(e.v)];
      if (b < 0) {
        if (inst.p(static_cast<int>(e.u), static_cast<int>(e.v)) < 1.0)
          throw mismatch_error("verify_sampler: zero-probability edge drawn");
        continue;
      }
      ++pair_count[static_cast<std::size_t>(b)];
      mask |= std::uint32_t{1} << b;
    }
    if (pattern) ++mask_count[mask];
  }
  report.min_marginal_p = 1.0;
  for (int i = 0; i < nrandom; ++i) {
    const auto& e = lists.random[static_cast<std::size_t>(i)];
    MarginalCheck mc;
    mc.u = e.u;
    mc.v = e.v;
    mc.exact = e.p;
    mc.empirical = static_cast<double>(pair_count[static_cast<std::size_t>(i)]) /
                   static_cast<double>(count);
    const double se =
        std::sqrt(e.p * (1.0 - e.p) / static_cast<double>(count));
    mc.z = se > 0.0 ? (mc.empirical - mc.exact) / se : 0.0;
    mc.p_value = stats::chisq_sf(mc.z * mc.z, 1);
    report.max_abs_z = std::max(report.max_abs_z, std::abs(mc.z));
    report.min_marginal_p = std::min(report.min_marginal_p, mc.p_value);
    report.marginals.push_back(mc);
  }
  if (pattern && nrandom > 0) {
    const auto patterns = std::size_t{1} << static_cast<unsigned>(nrandom);
    std::vector<double> expected(patterns, 0.0);
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      double prob = 1.0;
      for (int i = 0; i < nrandom; ++i) {
        const double p = lists.random[static_cast<std::size_t>(i)].p;
        prob *= (mask >> i & 1) ? p : 1.0 - p;
      }
      expected[mask] = prob * static_cast<double>(count);
    }
    // Pool cells with small expectation so the chi-square approximation holds.
    std::vector<std::size_t> order(patterns);
    for (std::size_t i = 0; i < patterns; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return expected[a] < expected[b];
    });
    std::vector<std::pair<double, std::int64_t>> cells;
    double pooled_exp = 0.0;
    std::int64_t pooled_obs = 0;
    for (const auto m : order) {
      pooled_exp += expected[m];
      pooled_obs += mask_count[m];
      if (pooled_exp >= 5.0) {
        cells.emplace_back(pooled_exp, pooled_obs);
        pooled_exp = 0.0;
        pooled_obs = 0;
      }
    }
    if (pooled_exp > 0.0 && !cells.empty()) {
      cells.back().first += pooled_exp;
      cells.back().second += pooled_obs;
    }
    if (cells.size() > 1) {
      double chi2 = 0.0;
      for (const auto& [exp_count, obs] : cells) {
        const double diff = static_cast<double>(obs) - exp_count;
        chi2 += diff * diff / exp_count;
      }
      report.pattern_tested = true;
      report.pattern_p =
          stats::chisq_sf(chi2, static_cast<int>(cells.size()) - 1);
    }
  }
  return report;
}

}  // namespace perco
