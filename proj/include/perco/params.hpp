#pragma once

#include <string>

#include "perco/errors.hpp"
#include "perco/point.hpp"

namespace perco {

// Edge {x,y} is open with probability 1 - exp(-beta * J(x-y)) where the
// default kernel is J(z) = c * |z|^-(d+alpha) in the sup norm.
struct ModelParams {
  int d = 1;
  double alpha = 0.5;
  double c = 1.0;
  double beta = 1.0;
  int L = 2;

  void validate() const {
    if (d < 1 || d > kMaxDim)
      throw config_error("d must be in [1, " + std::to_string(kMaxDim) + "]");
    if (!(alpha > 0.0) || !(alpha < static_cast<double>(d)))
      throw config_error("alpha must satisfy 0 < alpha < d");
    if (!(c > 0.0)) throw config_error("c must be positive");
    if (!(beta >= 0.0)) throw config_error("beta must be nonnegative");
    if (L < 2) throw config_error("L must be at least 2");
  }
};

}  // namespace perco
