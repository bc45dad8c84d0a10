#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <string>

namespace perco {

using Coord = std::int64_t;

// Lattice dimension is small; points carry their dimension at runtime.
inline constexpr int kMaxDim = 8;

struct Pt {
  std::array<Coord, kMaxDim> c{};
  int d = 0;

  static Pt zero(int dim) {
    Pt p;
    p.d = dim;
    return p;
  }

  Coord operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  Coord& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Pt& a, const Pt& b) {
    if (a.d != b.d) return false;
    for (int i = 0; i < a.d; ++i)
      if (a.c[static_cast<std::size_t>(i)] != b.c[static_cast<std::size_t>(i)]) return false;
    return true;
  }
  friend bool operator!=(const Pt& a, const Pt& b) { return !(a == b); }
};

inline Pt add(const Pt& a, const Pt& b) {
  Pt r = a;
  for (int i = 0; i < a.d; ++i) r[i] += b[i];
  return r;
}

inline Pt sub(const Pt& a, const Pt& b) {
  Pt r = a;
  for (int i = 0; i < a.d; ++i) r[i] -= b[i];
  return r;
}

inline bool is_zero(const Pt& a) {
  for (int i = 0; i < a.d; ++i)
    if (a[i] != 0) return false;
  return true;
}

inline Coord linf_norm(const Pt& z) {
  Coord m = 0;
  for (int i = 0; i < z.d; ++i) {
    Coord v = z[i] < 0 ? -z[i] : z[i];
    if (v > m) m = v;
  }
  return m;
}

// First nonzero coordinate positive: picks one representative per {z,-z}.
inline bool lex_positive(const Pt& z) {
  for (int i = 0; i < z.d; ++i) {
    if (z[i] != 0) return z[i] > 0;
  }
  return false;
}

// Floor division and the matching nonnegative remainder.
inline Coord floor_div(Coord a, Coord b) {
  Coord q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Coord floor_mod(Coord a, Coord b) { return a - floor_div(a, b) * b; }

inline std::string to_string(const Pt& p) {
  std::string s = "(";
  for (int i = 0; i < p.d; ++i) {
    if (i) s += ",";
    s += std::to_string(p[i]);
  }
  s += ")";
  return s;
}

}  // namespace perco
