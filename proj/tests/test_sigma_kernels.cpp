#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "perco/errors.hpp"
#include "perco/kernels.hpp"
#include "perco/rng.hpp"
#include "perco/sigma.hpp"

using namespace perco;

namespace {

ModelParams params_1d() {
  ModelParams pr;
  pr.d = 1;
  pr.alpha = 0.5;
  pr.c = 1.0;
  pr.L = 2;
  return pr;
}

Pt pt1(Coord x) {
  Pt p = Pt::zero(1);
  p[0] = x;
  return p;
}

Pt pt2(Coord x, Coord y) {
  Pt p = Pt::zero(2);
  p[0] = x;
  p[1] = y;
  return p;
}

// Random decomposition with a random sub-unit offset as well as digits.
SigmaDecomposition random_sigma(int d, int L, int depth, Rng& rng) {
  SigmaDecomposition sg =
      SigmaDecomposition::random(d, L, depth, rng.next());
  for (int i = 0; i < d; ++i)
    sg.unit_offset[i] =
        static_cast<Coord>(rng.below(static_cast<std::uint64_t>(L)));
  sg.finalize();
  return sg;
}

Pt random_point(int d, Coord lo, Coord hi, Rng& rng) {
  Pt p = Pt::zero(d);
  for (int i = 0; i < d; ++i)
    p[i] = lo + static_cast<Coord>(
                    rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  return p;
}

}  // namespace

TEST_CASE("power-law kernel values") {
  const auto pr = params_1d();
  CHECK(kernel_J(pr, pt1(2)) ==
        doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
  CHECK(kernel_J(pr, pt1(1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kernel_J(pr, pt1(-1)) == doctest::Approx(1.0).epsilon(1e-14));
  ModelParams p2;
  p2.d = 2;
  p2.alpha = 1.0;
  p2.c = 2.0;
  CHECK(kernel_J(p2, pt2(3, -4)) == doctest::Approx(0.03125).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_J(pr, pt1(0)), std::domain_error);
  const auto fn = power_law_kernel(pr);
  CHECK(fn(pt1(2)) == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
}

TEST_CASE("block lookup with the zero decomposition") {
  const auto sg = SigmaDecomposition::zeros(1, 2, 3);
  const Block b = block_of(sg, pt1(5), 2);
  CHECK(b.level == 2);
  CHECK(b.corner[0] == 4);
  CHECK(b.sigma_id == sg.digest());
  const Block s = block_of(sg, pt1(5), 0);
  CHECK(s.corner[0] == 5);
  CHECK_THROWS_AS(block_of(sg, pt1(5), 4), depth_error);
  CHECK_THROWS_AS(block_of(sg, pt1(5), -1), depth_error);
}

TEST_CASE("block lookup with shifted digits") {
  SigmaDecomposition sg;
  sg.d = 1;
  sg.L = 2;
  sg.depth = 2;
  sg.digits = {pt1(1), pt1(1)};
  sg.unit_offset = pt1(0);
  sg.finalize();
  const Block b1 = block_of(sg, pt1(1), 1);
  CHECK(b1.corner[0] == 0);
  const Block b2 = block_of(sg, pt1(1), 2);
  CHECK(b2.corner[0] == -2);
  CHECK(block_contains(b2, sg, pt1(-2)));
  CHECK(block_contains(b2, sg, pt1(1)));
  CHECK_FALSE(block_contains(b2, sg, pt1(2)));
}

TEST_CASE("hierarchy levels for small boxes") {
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  CHECK(hierarchy_level(sg, pt1(1), pt1(1)) == 0);
  CHECK(hierarchy_level(sg, pt1(0), pt1(1)) == 1);
  CHECK(hierarchy_level(sg, pt1(1), pt1(2)) == 2);
  CHECK(hierarchy_level(sg, pt1(-1), pt1(0)) == kLevelInfinite);

  SigmaDecomposition ones;
  ones.d = 1;
  ones.L = 2;
  ones.depth = 3;
  ones.digits = {pt1(1), pt1(1), pt1(1)};
  ones.unit_offset = pt1(0);
  ones.finalize();
  CHECK(hierarchy_level(ones, pt1(1), pt1(2)) == 3);
}

TEST_CASE("hierarchical distance values") {
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  CHECK(hierarchical_distance(sg, pt1(3), pt1(3)) == 0.0);
  CHECK(hierarchical_distance(sg, pt1(1), pt1(2)) == 4.0);
  CHECK(std::isinf(hierarchical_distance(sg, pt1(-1), pt1(0))));
}

TEST_CASE("sigma layer kernel values") {
  const auto pr = params_1d();
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  CHECK(kernel_H_sigma(pr, sg, pt1(1), pt1(2)) ==
        doctest::Approx(0.125).epsilon(1e-14));
  CHECK(kernel_H_sigma(pr, sg, pt1(3), pt1(3)) == 0.0);
  CHECK(kernel_H_sigma(pr, sg, pt1(-1), pt1(0)) == 0.0);
}

TEST_CASE("remainder kernel values") {
  const auto pr = params_1d();
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  CHECK(kernel_R_sigma(pr, sg, pt1(1), pt1(2)) ==
        doctest::Approx(0.875).epsilon(1e-14));
  CHECK(kernel_R_sigma(pr, sg, pt1(0), pt1(1)) ==
        doctest::Approx(1.0 - std::pow(2.0, -1.5)).epsilon(1e-13));
  CHECK(kernel_R_sigma(pr, sg, pt1(-1), pt1(0)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_R_sigma(pr, sg, pt1(2), pt1(2)), std::domain_error);
}

TEST_CASE("block layer kernel values") {
  const auto pr = params_1d();
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const Block b = block_of(sg, pt1(0), 2);
  CHECK(kernel_H_block(pr, sg, b, pt1(1), pt1(2)) ==
        doctest::Approx(0.125).epsilon(1e-14));
  CHECK(kernel_H_block(pr, sg, b, pt1(0), pt1(1)) == 0.0);
  CHECK(kernel_H_block(pr, sg, b, pt1(1), pt1(5)) == 0.0);
  const Block atom = block_of(sg, pt1(0), 0);
  CHECK_THROWS_AS(kernel_H_block(pr, sg, atom, pt1(0), pt1(1)),
                  std::domain_error);
}

TEST_CASE("restricted kernel drops only strict-ancestor layers") {
  const auto pr = params_1d();
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const Block b0 = block_of(sg, pt1(0), 0);
  CHECK(kernel_J_restricted(pr, sg, b0, pt1(2), pt1(3)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kernel_J_restricted(pr, sg, b0, pt1(0), pt1(1)) ==
        doctest::Approx(kernel_R_sigma(pr, sg, pt1(0), pt1(1))).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_J_restricted(pr, sg, b0, pt1(1), pt1(1)),
                  std::domain_error);
}

TEST_CASE("sibling blocks see the same restricted kernel") {
  const auto pr = params_1d();
  const auto sg = SigmaDecomposition::zeros(1, 2, 3);
  const Block left = block_of(sg, pt1(0), 1);
  const Block right = block_of(sg, pt1(2), 1);
  for (Coord x = 0; x < 8; ++x)
    for (Coord y = x + 1; y < 8; ++y)
      CHECK(kernel_J_restricted(pr, sg, left, pt1(x), pt1(y)) ==
            doctest::Approx(kernel_J_restricted(pr, sg, right, pt1(x), pt1(y)))
                .epsilon(1e-14));
}

TEST_CASE("translation by zero is the identity") {
  const auto sg = SigmaDecomposition::zeros(2, 3, 3);
  const auto moved = translate_sigma(sg, Pt::zero(2));
  CHECK(moved.digest() == sg.digest());
}

TEST_CASE("translation by L shifts only the coarse partitions") {
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const auto moved = translate_sigma(sg, pt1(2));
  bool level2_differs = false;
  for (Coord x = -4; x <= 8; ++x) {
    CHECK(block_of(moved, pt1(x), 1).corner ==
          block_of(sg, pt1(x), 1).corner);
    if (!(block_of(moved, pt1(x), 2).corner ==
          block_of(sg, pt1(x), 2).corner))
      level2_differs = true;
  }
  CHECK(level2_differs);
}

TEST_CASE("parents and children are consistent") {
  Rng rng(8181u);
  const auto sg = random_sigma(2, 3, 3, rng);
  const Block b = block_of(sg, pt2(4, -7), 2);
  const auto kids = children_of(sg, b);
  CHECK(kids.size() == 9);
  for (const auto& kid : kids) {
    CHECK(kid.level == 1);
    CHECK(parent_of(sg, kid).corner == b.corner);
    CHECK(is_strict_ancestor(sg, b, kid));
    CHECK_FALSE(is_strict_ancestor(sg, kid, b));
    CHECK_FALSE(is_strict_ancestor(sg, kid, kid));
  }
  const Block atom = block_of(sg, pt2(0, 0), 0);
  CHECK_THROWS_AS(children_of(sg, atom), std::domain_error);
}

TEST_CASE("foreign blocks are rejected") {
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  const auto other = SigmaDecomposition::random(1, 2, 2, 99);
  CHECK(sg.digest() != other.digest());
  const Block b = block_of(other, pt1(0), 1);
  const auto pr = params_1d();
  CHECK_THROWS_AS(kernel_H_block(pr, sg, b, pt1(0), pt1(1)), mismatch_error);
  CHECK_THROWS_AS(kernel_J_restricted(pr, sg, b, pt1(0), pt1(1)),
                  mismatch_error);
  CHECK_THROWS_AS(parent_of(sg, b), mismatch_error);
  CHECK_THROWS_AS(children_of(sg, b), mismatch_error);
}

TEST_CASE("decomposition validation rejects bad digits") {
  SigmaDecomposition sg;
  sg.d = 1;
  sg.L = 2;
  sg.depth = 1;
  sg.digits = {pt1(2)};
  sg.unit_offset = pt1(0);
  CHECK_THROWS_AS(sg.finalize(), config_error);
  sg.digits = {pt1(1)};
  sg.unit_offset = pt1(-1);
  CHECK_THROWS_AS(sg.finalize(), config_error);
  SigmaDecomposition badl;
  badl.d = 1;
  badl.L = 1;
  badl.depth = 0;
  badl.unit_offset = pt1(0);
  CHECK_THROWS_AS(badl.finalize(), config_error);
}

TEST_CASE("depth accessors reject out-of-range levels") {
  const auto sg = SigmaDecomposition::zeros(1, 2, 2);
  CHECK(sg.pow_L(0) == 1);
  CHECK(sg.pow_L(2) == 4);
  CHECK_THROWS_AS(sg.pow_L(3), depth_error);
  CHECK_THROWS_AS(sg.pow_L(-1), depth_error);
  CHECK_THROWS_AS(sg.anchor(3, 0), depth_error);
}

// randomized structural properties, ten thousand cases each

TEST_CASE("property: hierarchical distance is an ultrametric") {
  Rng rng(1001u);
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int L = 2 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(4));
    const auto sg = random_sigma(d, L, depth, rng);
    const Coord span = sg.pow_L(depth);
    const Pt x = random_point(d, -span, 2 * span, rng);
    const Pt y = random_point(d, -span, 2 * span, rng);
    const Pt z = random_point(d, -span, 2 * span, rng);
    const double dxz = hierarchical_distance(sg, x, z);
    const double dxy = hierarchical_distance(sg, x, y);
    const double dyz = hierarchical_distance(sg, y, z);
    REQUIRE(dxz <= std::max(dxy, dyz));
  }
}

TEST_CASE("property: hierarchical distance dominates the sup metric") {
  Rng rng(1002u);
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int L = 2 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(4));
    const auto sg = random_sigma(d, L, depth, rng);
    const Coord span = sg.pow_L(depth);
    const Pt x = random_point(d, -span, 2 * span, rng);
    const Pt y = random_point(d, -span, 2 * span, rng);
    const double dist = hierarchical_distance(sg, x, y);
    REQUIRE(dist >= static_cast<double>(linf_norm(sub(y, x))));
  }
}

TEST_CASE("property: layer plus remainder reproduces the kernel") {
  Rng rng(1003u);
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int L = 2 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(4));
    const auto sg = random_sigma(d, L, depth, rng);
    ModelParams pr;
    pr.d = d;
    pr.alpha = 0.1 + 0.8 * (static_cast<double>(d)) * rng.uniform01();
    if (pr.alpha >= d) pr.alpha = 0.9 * d;
    pr.c = 0.25 + 2.0 * rng.uniform01();
    pr.L = L;
    const Coord span = sg.pow_L(depth);
    const Pt x = random_point(d, -span, 2 * span, rng);
    Pt y = random_point(d, -span, 2 * span, rng);
    if (x == y) y[0] += 1;
    const double j = kernel_J(pr, sub(y, x));
    const double h = kernel_H_sigma(pr, sg, x, y);
    const double r = kernel_R_sigma(pr, sg, x, y);
    REQUIRE(r >= 0.0);
    REQUIRE(std::abs(h + r - j) <= 1e-15 * std::max(1.0, j));
  }
}

TEST_CASE("property: restricted kernel obeys the layer recursion") {
  Rng rng(1004u);
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int L = 2 + static_cast<int>(rng.below(3));
    const int depth = 2 + static_cast<int>(rng.below(3));
    const auto sg = random_sigma(d, L, depth, rng);
    ModelParams pr;
    pr.d = d;
    pr.alpha = 0.5 * d;
    pr.c = 1.0;
    pr.L = L;
    const Coord span = sg.pow_L(depth);
    const int level = static_cast<int>(rng.below(static_cast<std::uint64_t>(depth)));
    const Block b = block_of(sg, random_point(d, -span, 2 * span, rng), level);
    const Block parent = parent_of(sg, b);
    const Pt x = random_point(d, -span, 2 * span, rng);
    Pt y = random_point(d, -span, 2 * span, rng);
    if (x == y) y[0] += 1;
    const double lhs = kernel_J_restricted(pr, sg, parent, x, y);
    const double rhs = kernel_J_restricted(pr, sg, b, x, y) +
                       kernel_H_block(pr, sg, parent, x, y);
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, lhs));
  }
}

TEST_CASE("property: everything commutes with translation") {
  Rng rng(1005u);
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int L = 2 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(3));
    const auto sg = random_sigma(d, L, depth, rng);
    ModelParams pr;
    pr.d = d;
    pr.alpha = 0.5 * d;
    pr.c = 1.0;
    pr.L = L;
    const Coord span = sg.pow_L(depth);
    const Pt t = random_point(d, -2 * span, 2 * span, rng);
    const auto moved = translate_sigma(sg, t);
    const Pt x = random_point(d, -span, 2 * span, rng);
    Pt y = random_point(d, -span, 2 * span, rng);
    if (x == y) y[0] += 1;
    REQUIRE(hierarchy_level(moved, add(x, t), add(y, t)) ==
            hierarchy_level(sg, x, y));
    const int level = static_cast<int>(rng.below(static_cast<std::uint64_t>(depth + 1)));
    const Pt anchor_pt = random_point(d, -span, 2 * span, rng);
    const Block b = block_of(sg, anchor_pt, level);
    const Block bm = block_of(moved, add(anchor_pt, t), level);
    REQUIRE(bm.corner == add(b.corner, t));
    const double orig = kernel_J_restricted(pr, sg, b, x, y);
    const double shifted =
        kernel_J_restricted(pr, moved, bm, add(x, t), add(y, t));
    REQUIRE(std::abs(orig - shifted) <= 1e-12 * std::max(1.0, orig));
  }
}

TEST_CASE("property: exactly the joining block carries the layer") {
  Rng rng(1006u);
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const int L = 2 + static_cast<int>(rng.below(3));
    const int depth = 1 + static_cast<int>(rng.below(4));
    const auto sg = random_sigma(d, L, depth, rng);
    ModelParams pr;
    pr.d = d;
    pr.alpha = 0.5 * d;
    pr.c = 1.0;
    pr.L = L;
    const Coord span = sg.pow_L(depth);
    const Pt x = random_point(d, -span, 2 * span, rng);
    Pt y = random_point(d, -span, 2 * span, rng);
    if (x == y) y[0] += 1;
    const int h = hierarchy_level(sg, x, y);
    double total = 0.0;
    int nonzero = 0;
    for (int m = 1; m <= depth; ++m) {
      const double v = kernel_H_block(pr, sg, block_of(sg, x, m), x, y);
      if (v > 0.0) ++nonzero;
      total += v;
    }
    const double direct = kernel_H_sigma(pr, sg, x, y);
    REQUIRE(std::abs(total - direct) <= 1e-15);
    if (h >= 1 && h <= depth)
      REQUIRE(nonzero == 1);
    else
      REQUIRE(nonzero == 0);
  }
}
