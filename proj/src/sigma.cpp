#include "perco/sigma.hpp"

#include <string>

namespace perco {

namespace {

void check_digit_range(const Pt& p, int L, const char* what) {
  for (int i = 0; i < p.d; ++i)
    if (p[i] < 0 || p[i] >= L)
      throw config_error(std::string(what) + " entry out of [0, L)");
}

}  // namespace

SigmaDecomposition SigmaDecomposition::zeros(int d, int L, int depth) {
  SigmaDecomposition sg;
  sg.d = d;
  sg.L = L;
  sg.depth = depth;
  sg.digits.assign(static_cast<std::size_t>(depth), Pt::zero(d));
  sg.unit_offset = Pt::zero(d);
  sg.finalize();
  return sg;
}

SigmaDecomposition SigmaDecomposition::random(int d, int L, int depth,
                                              std::uint64_t seed) {
  SigmaDecomposition sg;
  sg.d = d;
  sg.L = L;
  sg.depth = depth;
  sg.unit_offset = Pt::zero(d);
  Rng rng(mix_key(0x5167u, seed));
  sg.digits.assign(static_cast<std::size_t>(depth), Pt::zero(d));
  for (auto& dig : sg.digits)
    for (int i = 0; i < d; ++i)
      dig[i] = static_cast<Coord>(rng.below(static_cast<std::uint64_t>(L)));
  sg.finalize();
  return sg;
}

void SigmaDecomposition::validate() const {
  if (d < 1 || d > kMaxDim) throw config_error("sigma: bad dimension");
  if (L < 2) throw config_error("sigma: L must be >= 2");
  if (depth < 0 || static_cast<int>(digits.size()) != depth)
    throw config_error("sigma: digit count does not match depth");
  for (const auto& dig : digits) {
    if (dig.d != d) throw config_error("sigma: digit dimension mismatch");
    check_digit_range(dig, L, "sigma digit");
  }
  if (unit_offset.d != d) throw config_error("sigma: offset dimension mismatch");
  check_digit_range(unit_offset, L, "sigma offset");
  // L^(depth+1) must fit comfortably in Coord.
  Coord p = 1;
  for (int n = 0; n <= depth; ++n) {
    if (p > (std::numeric_limits<Coord>::max() / (2 * L)))
      throw config_error("sigma: L^depth overflows coordinate range");
    p *= L;
  }
}

void SigmaDecomposition::finalize() {
  validate();
  pow_.assign(static_cast<std::size_t>(depth) + 1, 1);
  for (int n = 1; n <= depth; ++n)
    pow_[static_cast<std::size_t>(n)] = pow_[static_cast<std::size_t>(n - 1)] * L;
  anchors_.assign(static_cast<std::size_t>(depth) + 1, unit_offset);
  for (int n = 1; n <= depth; ++n) {
    Pt a = anchors_[static_cast<std::size_t>(n - 1)];
    for (int i = 0; i < d; ++i)
      a[i] += digits[static_cast<std::size_t>(n - 1)][i] * pow_[static_cast<std::size_t>(n)];
    anchors_[static_cast<std::size_t>(n)] = a;
  }
  std::uint64_t h = mix_key(0x70657263u, static_cast<std::uint64_t>(d));
  h = mix_key(h, static_cast<std::uint64_t>(L));
  h = mix_key(h, static_cast<std::uint64_t>(depth));
  for (const auto& dig : digits)
    for (int i = 0; i < d; ++i) h = mix_key(h, static_cast<std::uint64_t>(dig[i]));
  for (int i = 0; i < d; ++i)
    h = mix_key(h, static_cast<std::uint64_t>(unit_offset[i]));
  digest_ = h;
}

Coord SigmaDecomposition::pow_L(int n) const {
  if (n < 0 || n > depth) throw depth_error("pow_L: level beyond stored depth");
  return pow_[static_cast<std::size_t>(n)];
}

Coord SigmaDecomposition::anchor(int level, int i) const {
  if (level < 0 || level > depth)
    throw depth_error("anchor: level beyond stored depth");
  return anchors_[static_cast<std::size_t>(level)][i];
}

std::uint64_t SigmaDecomposition::digest() const { return digest_; }

Block block_of(const SigmaDecomposition& sg, const Pt& x, int level) {
  if (x.d != sg.d) throw mismatch_error("block_of: point dimension mismatch");
  if (level < 0) throw depth_error("block_of: negative level");
  if (level > sg.depth)
    throw depth_error("block_of: level " + std::to_string(level) +
                      " beyond stored sigma depth " + std::to_string(sg.depth));
  Block b;
  b.level = level;
  b.corner = Pt::zero(sg.d);
  b.sigma_id = sg.digest();
  const Coord w = sg.pow_[static_cast<std::size_t>(level)];
  const Pt& a = sg.anchors_[static_cast<std::size_t>(level)];
  for (int i = 0; i < sg.d; ++i)
    b.corner[i] = a[i] + w * floor_div(x[i] - a[i], w);
  return b;
}

int hierarchy_level(const SigmaDecomposition& sg, const Pt& x, const Pt& y) {
  if (x.d != sg.d || y.d != sg.d)
    throw mismatch_error("hierarchy_level: point dimension mismatch");
  if (x == y) return 0;
  for (int n = 1; n <= sg.depth; ++n) {
    const Coord w = sg.pow_[static_cast<std::size_t>(n)];
    const Pt& a = sg.anchors_[static_cast<std::size_t>(n)];
    bool same = true;
    for (int i = 0; i < sg.d; ++i) {
      if (floor_div(x[i] - a[i], w) != floor_div(y[i] - a[i], w)) {
        same = false;
        break;
      }
    }
    if (same) return n;
  }
  return kLevelInfinite;
}

double hierarchical_distance(const SigmaDecomposition& sg, const Pt& x,
                             const Pt& y) {
  const int h = hierarchy_level(sg, x, y);
  if (h == 0) return 0.0;
  if (h == kLevelInfinite) return std::numeric_limits<double>::infinity();
  return static_cast<double>(sg.pow_[static_cast<std::size_t>(h)]);
}

SigmaDecomposition translate_sigma(const SigmaDecomposition& sg, const Pt& x) {
  if (x.d != sg.d) throw mismatch_error("translate_sigma: dimension mismatch");
  SigmaDecomposition out;
  out.d = sg.d;
  out.L = sg.L;
  out.depth = sg.depth;
  out.digits.assign(static_cast<std::size_t>(sg.depth), Pt::zero(sg.d));
  out.unit_offset = Pt::zero(sg.d);
  const Coord L = sg.L;
  for (int i = 0; i < sg.d; ++i) {
    const Coord t = sg.unit_offset[i] + x[i];
    const Coord r = floor_mod(t, L);
    const Coord carry = t - r;  // multiple of L, absorbed into the digits
    out.unit_offset[i] = r;
    // digit-encoded part of the old anchor plus the carry
    Coord v = sg.anchors_[static_cast<std::size_t>(sg.depth)][i] -
              sg.unit_offset[i] + carry;
    for (int m = 1; m <= sg.depth; ++m) {
      const Coord wm = sg.pow_[static_cast<std::size_t>(m)];
      out.digits[static_cast<std::size_t>(m - 1)][i] =
          floor_mod(floor_div(v, wm), L);
    }
    // digits beyond the stored depth are dropped; they cannot affect any
    // level <= depth partition
  }
  out.finalize();
  return out;
}

bool block_contains(const Block& b, const SigmaDecomposition& sg, const Pt& x) {
  const Coord w = sg.pow_L(b.level);
  for (int i = 0; i < sg.d; ++i)
    if (x[i] < b.corner[i] || x[i] >= b.corner[i] + w) return false;
  return true;
}

bool is_strict_ancestor(const SigmaDecomposition& sg, const Block& anc,
                        const Block& b) {
  if (anc.sigma_id != b.sigma_id)
    throw mismatch_error("is_strict_ancestor: blocks from different sigmas");
  if (anc.level <= b.level) return false;
  const Block up = block_of(sg, b.corner, anc.level);
  return up.corner == anc.corner;
}

Block parent_of(const SigmaDecomposition& sg, const Block& b) {
  if (b.sigma_id != sg.digest())
    throw mismatch_error("parent_of: block from a different sigma");
  return block_of(sg, b.corner, b.level + 1);
}

std::vector<Block> children_of(const SigmaDecomposition& sg, const Block& b) {
  if (b.sigma_id != sg.digest())
    throw mismatch_error("children_of: block from a different sigma");
  if (b.level < 1) throw std::domain_error("children_of: level-0 blocks are atoms");
  const Coord w = sg.pow_L(b.level - 1);
  const int ld = sg.L;
  std::vector<Block> out;
  std::int64_t total = 1;
  for (int i = 0; i < sg.d; ++i) total *= ld;
  out.reserve(static_cast<std::size_t>(total));
  Pt delta = Pt::zero(sg.d);
  for (;;) {
    Block ch;
    ch.level = b.level - 1;
    ch.corner = b.corner;
    ch.sigma_id = b.sigma_id;
    for (int i = 0; i < sg.d; ++i) ch.corner[i] += delta[i] * w;
    out.push_back(ch);
    int i = 0;
    for (; i < sg.d; ++i) {
      if (++delta[i] < ld) break;
      delta[i] = 0;
    }
    if (i == sg.d) break;
  }
  return out;
}

}  // namespace perco
