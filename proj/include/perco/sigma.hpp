#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "perco/errors.hpp"
#include "perco/params.hpp"
#include "perco/point.hpp"
#include "perco/rng.hpp"

namespace perco {

// Returned by hierarchy_level when two points share no stored block.
inline constexpr int kLevelInfinite = std::numeric_limits<int>::max();

// Nested partitions of Z^d into L-adic blocks. Level-n blocks are translates
// of [0, L^n)^d on the grid L^n * Z^d, shifted by the level-n anchor
//   s_n[i] = sum_{m<=n} digit[m][i] * L^m + unit_offset[i].
// Digits only shift a level-n partition by multiples of L, so a unit offset
// in [0, L)^d is carried separately; translations then stay inside the
// representable family and carries propagate into the digits.
struct SigmaDecomposition {
  int d = 1;
  int L = 2;
  int depth = 0;                           // digits stored for levels 1..depth
  std::vector<Pt> digits;                  // digits[m-1] = sigma_m, entries in [0, L)
  Pt unit_offset;                          // entries in [0, L)

  static SigmaDecomposition zeros(int d, int L, int depth);
  static SigmaDecomposition random(int d, int L, int depth, std::uint64_t seed);

  void validate() const;

  // L^n, overflow-checked at construction.
  Coord pow_L(int n) const;

  // Level-n anchor coordinate; anchor(0) = unit_offset.
  Coord anchor(int level, int i) const;

  std::uint64_t digest() const;

  int max_level() const { return depth; }

  // cached by finalize()
  std::vector<Coord> pow_;
  std::vector<Pt> anchors_;
  std::uint64_t digest_ = 0;
  void finalize();
};

// A level-n block, identified by its minimal corner. Carries the digest of
// the decomposition that produced it so cross-sigma mixing is caught.
struct Block {
  int level = 0;
  Pt corner;
  std::uint64_t sigma_id = 0;

  friend bool operator==(const Block& a, const Block& b) {
    return a.level == b.level && a.corner == b.corner && a.sigma_id == b.sigma_id;
  }
};

// The level-n block containing x. Throws depth_error for n > depth.
Block block_of(const SigmaDecomposition& sg, const Pt& x, int level);

// Smallest level at which x and y share a block; 0 iff x == y;
// kLevelInfinite when no stored level joins them.
int hierarchy_level(const SigmaDecomposition& sg, const Pt& x, const Pt& y);

// L^hierarchy_level as a double; 0 for x == y, +inf past the stored prefix.
double hierarchical_distance(const SigmaDecomposition& sg, const Pt& x, const Pt& y);

// Decomposition whose blocks are the blocks of sg translated by x.
SigmaDecomposition translate_sigma(const SigmaDecomposition& sg, const Pt& x);

bool block_contains(const Block& b, const SigmaDecomposition& sg, const Pt& x);

// True iff anc strictly contains b (higher level, same branch).
bool is_strict_ancestor(const SigmaDecomposition& sg, const Block& anc, const Block& b);

Block parent_of(const SigmaDecomposition& sg, const Block& b);

std::vector<Block> children_of(const SigmaDecomposition& sg, const Block& b);

}  // namespace perco
