#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "perco/oracle.hpp"
#include "perco/rng.hpp"
#include "perco/sampler.hpp"

using namespace perco;

namespace {

TinyInstance triangle(double p) {
  auto inst = TinyInstance::empty(3);
  inst.set_p(0, 1, p);
  inst.set_p(1, 2, p);
  inst.set_p(0, 2, p);
  return inst;
}

ModelParams params_1d(double beta) {
  ModelParams pr;
  pr.d = 1;
  pr.alpha = 0.5;
  pr.c = 1.0;
  pr.L = 2;
  pr.beta = beta;
  return pr;
}

TinyInstance random_instance(int nv, Rng& rng, bool with_frozen) {
  auto inst = TinyInstance::empty(nv);
  for (int u = 0; u < nv; ++u)
    for (int v = u + 1; v < nv; ++v) {
      const auto roll = rng.below(10);
      double p = rng.uniform01();
      if (with_frozen && roll == 0) p = 0.0;
      if (with_frozen && roll == 1) p = 1.0;
      inst.set_p(u, v, p);
    }
  return inst;
}

// eval hook returning a fixed trio of partition statistics
void trio_eval(const SmallDsu& dsu, std::vector<double>& out, int nv) {
  std::int64_t kmax = 0, susc = 0;
  for (int v = 0; v < nv; ++v) {
    if (dsu.find(v) != v) continue;
    const std::int64_t s = dsu.size[static_cast<std::size_t>(v)];
    kmax = std::max(kmax, s);
    susc += s * s;
  }
  out.push_back(static_cast<double>(kmax));
  out.push_back(static_cast<double>(susc));
  out.push_back(dsu.find(0) == dsu.find(nv - 1) ? 1.0 : 0.0);
}

}  // namespace

TEST_CASE("triangle connection probability") {
  const auto inst = triangle(0.5);
  CHECK(exact_connection_probability(inst, 0, 1) ==
        doctest::Approx(0.625).epsilon(1e-12));
  CHECK(exact_connection_probability(inst, 1, 1) == 1.0);
}

TEST_CASE("two-vertex connection probability") {
  auto inst = TinyInstance::empty(2);
  inst.set_p(0, 1, 0.3);
  CHECK(exact_connection_probability(inst, 0, 1) ==
        doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("cluster law of the middle of a path") {
  auto inst = TinyInstance::empty(3);
  inst.set_p(0, 1, 0.5);
  inst.set_p(1, 2, 0.5);
  const auto law = exact_cluster_law(inst, 1);
  REQUIRE(law.size() == 4);
  CHECK(law[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(law[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(law[3] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::accumulate(law.begin(), law.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cluster law of a pair") {
  auto inst = TinyInstance::empty(2);
  inst.set_p(0, 1, 0.5);
  const auto law = exact_cluster_law(inst, 0);
  CHECK(law[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(law[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("largest-intersection law on the triangle") {
  const auto inst = triangle(0.5);
  const auto law = exact_kmax_law(inst, {0, 1, 2});
  REQUIRE(law.size() == 4);
  CHECK(law[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(law[2] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(law[3] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(exact_mean_kmax(inst, {0, 1, 2}) ==
        doctest::Approx(2.375).epsilon(1e-12));
  CHECK(exact_mean_restricted_susceptibility(inst, {0, 1, 2}) ==
        doctest::Approx(6.75).epsilon(1e-12));
}

TEST_CASE("instance validation limits") {
  CHECK_THROWS_AS(TinyInstance::empty(17), size_error);
  CHECK_THROWS_AS(TinyInstance::empty(0), size_error);
  auto inst = TinyInstance::empty(3);
  CHECK_THROWS_AS(inst.set_p(1, 1, 0.5), std::domain_error);
  CHECK_THROWS_AS(inst.set_p(0, 1, -0.1), std::domain_error);
  CHECK_THROWS_AS(inst.set_p(0, 1, 1.1), std::domain_error);
  CHECK_THROWS_AS(exact_connection_probability(inst, 0, 3), std::domain_error);
  CHECK_THROWS_AS(exact_cluster_law(inst, -1), std::domain_error);
  // 9 fully random vertices would need 36 pattern bits
  Rng rng(1u);
  auto big = random_instance(9, rng, false);
  CHECK_THROWS_AS(
      expected_stats(big, [](const SmallDsu&, std::vector<double>&) {}),
      size_error);
}

TEST_CASE("pruned enumeration matches the reference loop") {
  Rng rng(90210u);
  for (int trial = 0; trial < 12; ++trial) {
    const int nv = 3 + static_cast<int>(rng.below(3));
    const auto inst = random_instance(nv, rng, trial % 2 == 0);
    const auto eval = [nv](const SmallDsu& dsu, std::vector<double>& out) {
      trio_eval(dsu, out, nv);
    };
    const auto fast = expected_stats(inst, eval);
    const auto ref = expected_stats_reference(inst, eval);
    REQUIRE(fast.size() == ref.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
      REQUIRE(fast[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("wide instances split work without changing results") {
  // 7 fully random vertices: 21 pattern bits, enough to engage the split head
  Rng rng(777u);
  const auto inst = random_instance(7, rng, false);
  const auto eval = [](const SmallDsu& dsu, std::vector<double>& out) {
    trio_eval(dsu, out, 7);
  };
  const auto fast = expected_stats(inst, eval, 0);
  const auto ref = expected_stats_reference(inst, eval);
  REQUIRE(fast.size() == ref.size());
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  const auto t1 = expected_stats(inst, eval, 1);
  const auto t4 = expected_stats(inst, eval, 4);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i] == fast[i]);
    CHECK(t4[i] == fast[i]);
  }
}

TEST_CASE("reference loop rejects oversized instances") {
  // 8 fully random vertices: 28 bits pass the pruned path, fail the reference
  Rng rng(11u);
  const auto inst = random_instance(8, rng, false);
  const auto eval = [](const SmallDsu& dsu, std::vector<double>& out) {
    out.push_back(dsu.find(0) == dsu.find(7) ? 1.0 : 0.0);
  };
  CHECK_THROWS_AS(expected_stats_reference(inst, eval), size_error);
  const auto fast = expected_stats(inst, eval);
  CHECK(fast.size() == 1);
  CHECK(fast[0] >= 0.0);
  CHECK(fast[0] <= 1.0);
}

TEST_CASE("plain instance carries the kernel rates") {
  const auto pr = params_1d(0.8);
  const BoxGeometry box(1, 4);
  const auto inst = plain_instance(pr, box);
  REQUIRE(inst.nv == 4);
  for (int u = 0; u < 4; ++u)
    for (int v = u + 1; v < 4; ++v) {
      Pt z = Pt::zero(1);
      z[0] = v - u;
      const double expct = -std::expm1(-pr.beta * kernel_J(pr, z));
      CHECK(inst.p(u, v) == doctest::Approx(expct).epsilon(1e-13));
    }
}

TEST_CASE("restricted instance drops the ancestor layers") {
  const auto pr = params_1d(0.8);
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const BoxGeometry box(1, 4);
  const Block parent = block_of(sg, Pt::zero(1), 2);
  const auto inst = restricted_instance(pr, sg, box, parent);
  const auto child = children_of(sg, parent).front();
  for (int u = 0; u < 4; ++u)
    for (int v = u + 1; v < 4; ++v) {
      Pt x = Pt::zero(1), y = Pt::zero(1);
      x[0] = u;
      y[0] = v;
      const double rate = kernel_J_restricted(pr, sg, child, x, y);
      const double expct = -std::expm1(-pr.beta * rate);
      CHECK(inst.p(u, v) == doctest::Approx(expct).epsilon(1e-13));
    }
  // distance-2 pairs join at the parent, so their rate is strictly thinner
  CHECK(inst.p(0, 2) < plain_instance(pr, box).p(0, 2));
  // adjacent pairs join below the parent and keep the full rate
  CHECK(inst.p(0, 1) == doctest::Approx(plain_instance(pr, box).p(0, 1)));
}

TEST_CASE("all children are good at zero temperature") {
  const auto pr = params_1d(0.0);
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const BoxGeometry box(1, 4);
  const auto report =
      exact_good_children(pr, sg, box, block_of(sg, Pt::zero(1), 2));
  CHECK(report.good_count == 2);
  for (const auto& ch : report.children) CHECK(ch.good);
}

TEST_CASE("symmetric children are all good") {
  const auto pr = params_1d(1.0);
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const BoxGeometry box(1, 4);
  const auto report =
      exact_good_children(pr, sg, box, block_of(sg, Pt::zero(1), 2));
  CHECK(report.good_count == 2);
  CHECK(report.children.size() == 2);
  CHECK(report.children[0].mean_kmax ==
        doctest::Approx(report.children[1].mean_kmax).epsilon(1e-12));
}

TEST_CASE("a strictly smaller child is the good one") {
  // side-3 box: the right child of the top block holds a single site
  const auto pr = params_1d(1.0);
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const BoxGeometry box(1, 3);
  const auto report =
      exact_good_children(pr, sg, box, block_of(sg, Pt::zero(1), 2));
  REQUIRE(report.children.size() == 2);
  CHECK(report.good_count == 1);
  CHECK_FALSE(report.children[0].good);
  CHECK(report.children[1].good);
  CHECK(report.children[1].vertices == std::vector<int>{2});
}

TEST_CASE("exact goodness is thread-count independent") {
  const auto pr = params_1d(0.7);
  const auto sg = SigmaDecomposition::zeros(1, 2, 3);
  const BoxGeometry box(1, 8);
  const Block parent = block_of(sg, Pt::zero(1), 2);
  const auto a = exact_good_children(pr, sg, box, parent, 1);
  const auto b = exact_good_children(pr, sg, box, parent, 4);
  REQUIRE(a.children.size() == b.children.size());
  CHECK(a.good_count == b.good_count);
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    CHECK(a.children[i].mean_kmax == b.children[i].mean_kmax);
    CHECK(a.children[i].mean_susceptibility ==
          b.children[i].mean_susceptibility);
  }
}

TEST_CASE("sampler verification accepts the true law") {
  const auto pr = params_1d(1.0);
  const BoxGeometry box(1, 3);
  const auto inst = plain_instance(pr, box);
  const auto report = verify_sampler(
      inst,
      [&](std::int64_t i) {
        return sample_plain(pr, box, {3131u, static_cast<std::uint64_t>(i)}, {})
            .union_edges();
      },
      20000);
  CHECK(report.draws == 20000);
  CHECK(report.min_marginal_p > 1e-3);
  CHECK(report.pattern_tested);
  CHECK(report.pattern_p > 1e-3);
  REQUIRE(report.marginals.size() == 3);
}

TEST_CASE("sampler verification accepts the layered union") {
  const auto pr = params_1d(1.0);
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const BoxGeometry box(1, 3);
  const auto inst = plain_instance(pr, box);
  const auto report = verify_sampler(
      inst,
      [&](std::int64_t i) {
        return sample_layered(pr, sg, box, 2,
                              {3132u, static_cast<std::uint64_t>(i)}, {})
            .union_edges();
      },
      20000);
  CHECK(report.min_marginal_p > 1e-3);
  CHECK(report.pattern_p > 1e-3);
}

TEST_CASE("sampler verification flags a biased sampler") {
  const auto pr = params_1d(1.0);
  const auto biased = params_1d(0.9);
  const BoxGeometry box(1, 3);
  const auto inst = plain_instance(pr, box);
  const auto report = verify_sampler(
      inst,
      [&](std::int64_t i) {
        return sample_plain(biased, box, {3133u, static_cast<std::uint64_t>(i)}, {})
            .union_edges();
      },
      20000);
  CHECK(report.min_marginal_p < 1e-3);
}

TEST_CASE("sampler verification rejects malformed draws") {
  const auto pr = params_1d(1.0);
  const BoxGeometry box(1, 3);
  const auto inst = plain_instance(pr, box);
  CHECK_THROWS_AS(
      verify_sampler(inst, [](std::int64_t) { return std::vector<Edge>{}; }, 0),
      std::domain_error);
  CHECK_THROWS_AS(verify_sampler(
                      inst,
                      [](std::int64_t) {
                        return std::vector<Edge>{make_edge(0, 5)};
                      },
                      10),
                  mismatch_error);
  auto gapped = TinyInstance::empty(3);
  gapped.set_p(0, 1, 0.5);
  gapped.set_p(1, 2, 0.5);
  CHECK_THROWS_AS(verify_sampler(
                      gapped,
                      [](std::int64_t) {
                        return std::vector<Edge>{make_edge(0, 2)};
                      },
                      10),
                  mismatch_error);
}

TEST_CASE("laws stay normalized on random instances") {
  Rng rng(40404u);
  for (int trial = 0; trial < 20; ++trial) {
    const int nv = 2 + static_cast<int>(rng.below(4));
    const auto inst = random_instance(nv, rng, true);
    const auto law = exact_cluster_law(inst, 0);
    CHECK(std::accumulate(law.begin(), law.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-11));
    std::vector<int> B;
    for (int v = 0; v < nv; ++v)
      if (rng.below(2)) B.push_back(v);
    if (B.empty()) B.push_back(0);
    const auto klaw = exact_kmax_law(inst, B);
    CHECK(std::accumulate(klaw.begin(), klaw.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-11));
    double mean = 0.0;
    for (std::size_t m = 0; m < klaw.size(); ++m)
      mean += static_cast<double>(m) * klaw[m];
    CHECK(exact_mean_kmax(inst, B) == doctest::Approx(mean).epsilon(1e-11));
  }
}
