#pragma once

#include <cstdint>
#include <string>

#include "perco/errors.hpp"
#include "perco/point.hpp"

namespace perco {

// Finite observation window [0, side-1]^d with free boundary. Vertices are
// indexed row-major with coordinate 0 fastest.
struct BoxGeometry {
  int d = 1;
  Coord side = 1;
  std::int64_t vertex_count = 1;

  BoxGeometry() = default;
  BoxGeometry(int d_, Coord side_) : d(d_), side(side_) {
    if (d < 1 || d > kMaxDim) throw config_error("box: bad dimension");
    if (side < 1) throw config_error("box: side must be >= 1");
    vertex_count = 1;
    for (int i = 0; i < d; ++i) {
      if (vertex_count > (std::int64_t{1} << 32) / side)
        throw config_error("box: too many vertices");
      vertex_count *= side;
    }
  }

  bool contains(const Pt& p) const {
    if (p.d != d) return false;
    for (int i = 0; i < d; ++i)
      if (p[i] < 0 || p[i] >= side) return false;
    return true;
  }

  std::int64_t index(const Pt& p) const {
    std::int64_t idx = 0;
    for (int i = d - 1; i >= 0; --i) idx = idx * side + p[i];
    return idx;
  }

  Pt point(std::int64_t idx) const {
    Pt p = Pt::zero(d);
    for (int i = 0; i < d; ++i) {
      p[i] = idx % side;
      idx /= side;
    }
    return p;
  }

  // Central vertex, the default origin for radial statistics.
  Pt center() const {
    Pt p = Pt::zero(d);
    for (int i = 0; i < d; ++i) p[i] = side / 2;
    return p;
  }
};

}  // namespace perco
