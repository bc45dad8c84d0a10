#include "perco/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace perco {

double kernel_J(const ModelParams& pr, const Pt& z) {
  if (is_zero(z)) throw std::domain_error("kernel_J: zero displacement");
  return pr.c * std::pow(static_cast<double>(linf_norm(z)),
                         -(static_cast<double>(pr.d) + pr.alpha));
}

KernelFn power_law_kernel(const ModelParams& pr) {
  ModelParams copy = pr;
  return [copy](const Pt& z) { return kernel_J(copy, z); };
}

double kernel_H_sigma(const ModelParams& pr, const SigmaDecomposition& sg,
                      const Pt& x, const Pt& y) {
  const int h = hierarchy_level(sg, x, y);
  if (h == 0 || h == kLevelInfinite) return 0.0;
  return pr.c * std::pow(static_cast<double>(sg.L),
                         -(static_cast<double>(pr.d) + pr.alpha) *
                             static_cast<double>(h));
}

double kernel_R_sigma(const ModelParams& pr, const SigmaDecomposition& sg,
                      const Pt& x, const Pt& y, const KernelFn* kernel) {
  const Pt z = sub(y, x);
  if (is_zero(z)) throw std::domain_error("kernel_R_sigma: equal points");
  const double j = kernel ? (*kernel)(z) : kernel_J(pr, z);
  const double h = kernel_H_sigma(pr, sg, x, y);
  const double r = j - h;
  if (r < -1e-9 * std::max(1.0, j))
    throw kernel_contract_error("kernel_R_sigma: J - H negative");
  return r < 0.0 ? 0.0 : r;
}

double kernel_H_block(const ModelParams& pr, const SigmaDecomposition& sg,
                      const Block& b, const Pt& x, const Pt& y) {
  if (b.sigma_id != sg.digest())
    throw mismatch_error("kernel_H_block: block from a different sigma");
  if (b.level < 1)
    throw std::domain_error("kernel_H_block: level-0 blocks carry no layer");
  if (!block_contains(b, sg, x) || !block_contains(b, sg, y)) return 0.0;
  if (hierarchy_level(sg, x, y) != b.level) return 0.0;
  return pr.c * std::pow(static_cast<double>(sg.L),
                         -(static_cast<double>(pr.d) + pr.alpha) *
                             static_cast<double>(b.level));
}

double kernel_J_restricted(const ModelParams& pr, const SigmaDecomposition& sg,
                           const Block& b, const Pt& x, const Pt& y,
                           const KernelFn* kernel) {
  if (b.sigma_id != sg.digest())
    throw mismatch_error("kernel_J_restricted: block from a different sigma");
  const Pt z = sub(y, x);
  if (is_zero(z))
    throw std::domain_error("kernel_J_restricted: equal points");
  const double j = kernel ? (*kernel)(z) : kernel_J(pr, z);
  const int h = hierarchy_level(sg, x, y);
  if (h == kLevelInfinite || h <= b.level) return j;
  // The joining block sits above b; drop its layer iff it contains b.
  const Block join = block_of(sg, x, h);
  const Block up = block_of(sg, b.corner, h);
  if (up.corner == join.corner) {
    const double hval =
        pr.c * std::pow(static_cast<double>(sg.L),
                        -(static_cast<double>(pr.d) + pr.alpha) *
                            static_cast<double>(h));
    const double r = j - hval;
    if (r < -1e-9 * std::max(1.0, j))
      throw kernel_contract_error("kernel_J_restricted: J - H negative");
    return r < 0.0 ? 0.0 : r;
  }
  return j;
}

}  // namespace perco
